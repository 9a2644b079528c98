#include "stripefrac/cli.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "stripefrac/bench.hpp"
#include "stripefrac/kernels.hpp"
#include "stripefrac/synth.hpp"
#include "stripefrac/validate.hpp"
#include "stripefrac/version.hpp"

namespace stripefrac {

namespace {

using nlohmann::json;

int default_threads() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

json input_digest(const std::string& path) {
  return json{{"path", path}, {"fnv1a64", hex64(fnv1a64_file(path))}};
}

void write_manifest(const std::string& out_path, json manifest) {
  manifest["tool"] = std::string(kToolName);
  manifest["version"] = std::string(kToolVersion);
  const std::string path = out_path + ".manifest.json";
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << manifest.dump(2) << "\n";
  if (!out) throw Error("failed writing '" + path + "'");
}

json counters_json(const KernelCounters& c) {
  return json{{"accumulator_writes", c.accumulator_writes},
              {"embedding_reads", c.embedding_reads},
              {"kernel_passes", c.kernel_passes}};
}

std::pair<int, int> parse_stripe_range(const std::string& text) {
  const std::size_t colon = text.find(':');
  std::size_t tail_a = 0, tail_b = 0;
  int a = 0, b = 0;
  try {
    a = std::stoi(text.substr(0, colon), &tail_a);
    b = std::stoi(text.substr(colon + 1), &tail_b);
  } catch (const std::exception&) {
    throw Error("bad stripe range '" + text + "', expected start:stop");
  }
  if (colon == std::string::npos || tail_a != colon || colon + 1 + tail_b != text.size())
    throw Error("bad stripe range '" + text + "', expected start:stop");
  return {a, b};
}

const std::map<std::string, Metric> kMetricNames{
    {"unweighted", Metric::Unweighted},
    {"weighted-unnormalized", Metric::WeightedUnnormalized},
    {"weighted-normalized", Metric::WeightedNormalized}};
const std::map<std::string, Variant> kVariantNames{
    {"naive", Variant::Naive}, {"batched", Variant::Batched}, {"tiled", Variant::Tiled}};
const std::map<std::string, Precision> kPrecisionNames{{"fp32", Precision::Fp32},
                                                       {"fp64", Precision::Fp64}};
const std::map<std::string, TableFormat> kFormatNames{
    {"tsv-dense", TableFormat::TsvDense}, {"tsv-sparse", TableFormat::TsvSparse}};

struct ComputeOpts {
  std::string tree_path, table_path, out_path, stripe_range;
  TableFormat format = TableFormat::TsvDense;
  KernelConfig cfg;
  int threads = default_threads();
  std::uint64_t seed = 1;
};

template <class Real>
void run_compute_typed(const ComputeOpts& o, const PhyloTree& tree,
                       const SampleTable& table) {
  const int S = total_stripes(table.n_samples());
  const bool partial = !o.stripe_range.empty();
  int start = 0, stop = S;
  if (partial) std::tie(start, stop) = parse_stripe_range(o.stripe_range);

  KernelCounters counters;
  const auto t0 = std::chrono::steady_clock::now();
  if (partial) {
    auto set = compute_unifrac<Real>(tree, table, o.cfg, start, stop, o.threads, &counters);
    write_stripe_file(o.out_path, set);
  } else {
    const auto dm = compute_distance_matrix<Real>(tree, table, o.cfg, o.threads, &counters);
    write_tsv(o.out_path, dm);
  }
  const double wall = std::chrono::duration<double>(
      std::chrono::steady_clock::now() - t0).count();

  write_manifest(o.out_path,
                 json{{"command", "compute"},
                      {"inputs", json::array({input_digest(o.tree_path),
                                              input_digest(o.table_path)})},
                      {"output", o.out_path},
                      {"table_format", o.format == TableFormat::TsvDense ? "tsv-dense"
                                                                         : "tsv-sparse"},
                      {"metric", std::string(name(o.cfg.metric))},
                      {"precision", std::string(name(o.cfg.precision))},
                      {"variant", std::string(name(o.cfg.variant))},
                      {"batch_size", o.cfg.batch_capacity},
                      {"step_size", o.cfg.resolved_step_size()},
                      {"n_samples", table.n_samples()},
                      {"stripes", json{{"start", start}, {"stop", stop}, {"total", S}}},
                      {"threads", o.threads},
                      {"seed", o.seed},
                      {"wall_seconds", wall},
                      {"counters", counters_json(counters)}});
  std::fprintf(stderr, "%s: %s stripes %d:%d of %d in %.3fs -> %s\n", kToolName.data(),
               std::string(name(o.cfg.metric)).c_str(), start, stop, S, wall,
               o.out_path.c_str());
}

void run_compute(const ComputeOpts& o) {
  const PhyloTree tree = parse_newick_file(o.tree_path);
  const SampleTable table = load_table_file(o.table_path, o.format);
  if (o.cfg.precision == Precision::Fp32)
    run_compute_typed<float>(o, tree, table);
  else
    run_compute_typed<double>(o, tree, table);
}

struct MergeOpts {
  std::vector<std::string> parts;
  std::string out_path, table_path;
  TableFormat format = TableFormat::TsvDense;
};

void run_merge(const MergeOpts& o) {
  std::vector<std::string> ids;
  if (!o.table_path.empty())
    ids = load_table_file(o.table_path, o.format).sample_ids;

  const auto t0 = std::chrono::steady_clock::now();
  const DistanceMatrix dm = merge_stripe_files(o.parts, std::move(ids));
  write_tsv(o.out_path, dm);
  const double wall = std::chrono::duration<double>(
      std::chrono::steady_clock::now() - t0).count();

  json inputs = json::array();
  for (const auto& p : o.parts) inputs.push_back(input_digest(p));
  if (!o.table_path.empty()) inputs.push_back(input_digest(o.table_path));
  write_manifest(o.out_path, json{{"command", "merge"},
                                  {"inputs", inputs},
                                  {"output", o.out_path},
                                  {"precision", std::string(name(dm.precision))},
                                  {"n_samples", dm.n()},
                                  {"wall_seconds", wall}});
  std::fprintf(stderr, "%s: merged %zu stripe files -> %s\n", kToolName.data(),
               o.parts.size(), o.out_path.c_str());
}

struct CompareOpts {
  std::string m1_path, m2_path;
  int permutations = 999;
  std::uint64_t seed = 1;
};

void run_compare(const CompareOpts& o) {
  const DistanceMatrix m1 = read_tsv_file(o.m1_path);
  DistanceMatrix m2 = read_tsv_file(o.m2_path);

  if (m1.sample_ids != m2.sample_ids) {
    // same id set in another order is fine: realign the second matrix
    std::map<std::string, int> where;
    for (int i = 0; i < m2.n(); ++i) where[m2.sample_ids[static_cast<std::size_t>(i)]] = i;
    if (m1.n() != m2.n() || static_cast<int>(where.size()) != m2.n())
      throw Error("matrices name different sample sets");
    RowMatrix<double> re(m2.n(), m2.n());
    for (int i = 0; i < m1.n(); ++i) {
      auto it = where.find(m1.sample_ids[static_cast<std::size_t>(i)]);
      if (it == where.end()) throw Error("matrices name different sample sets");
      for (int j = 0; j < m1.n(); ++j)
        re(i, j) = m2.values(it->second, where.at(m1.sample_ids[static_cast<std::size_t>(j)]));
    }
    m2.values = std::move(re);
    m2.sample_ids = m1.sample_ids;
  }

  const MantelResult res = mantel(m1, m2, o.permutations, o.seed);
  std::printf("r\t%.17g\n", res.r);
  std::printf("r_squared\t%.17g\n", res.r_squared);
  std::printf("p_value\t%.17g\n", res.p_value);
  std::printf("permutations\t%d\n", res.permutations);
  std::printf("seed\t%llu\n", static_cast<unsigned long long>(res.seed));
  std::printf("correlation\tpearson\n");
  std::printf("rng\tmt19937_64+splitmix64\n");
}

struct BenchOpts {
  int n_samples = 512;
  int n_leaves = 256;
  int repeats = 3;
  int threads = default_threads();
  std::uint64_t seed = 1;
  double density = 0.3;
  KernelConfig cfg;
  std::vector<Variant> variants{Variant::Naive, Variant::Batched, Variant::Tiled};
};

void run_bench(const BenchOpts& o) {
  const SynthInstance inst = random_instance(o.seed, o.n_samples, o.n_leaves, o.density);
  std::fprintf(stderr,
               "%s: bench n=%d leaves=%d rows=%d metric=%s precision=%s batch=%d "
               "step=%d threads=%d repeats=%d\n",
               kToolName.data(), o.n_samples, o.n_leaves, 2 * o.n_leaves - 2,
               std::string(name(o.cfg.metric)).c_str(),
               std::string(name(o.cfg.precision)).c_str(), o.cfg.batch_capacity,
               o.cfg.resolved_step_size(), o.threads, o.repeats);
  const auto runs = bench_variants(inst.tree, inst.table, o.cfg, o.variants,
                                   o.repeats, o.threads);
  std::fputs(format_bench_table(runs).c_str(), stdout);
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"striped UniFrac distance matrices"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  ComputeOpts co;
  auto* compute = app.add_subcommand("compute", "compute a distance matrix or stripe range");
  compute->add_option("--tree", co.tree_path, "newick tree file")->required();
  compute->add_option("--table", co.table_path, "feature table file")->required();
  compute->add_option("--table-format", co.format, "table file layout")
      ->transform(CLI::CheckedTransformer(kFormatNames))
      ->default_str("tsv-dense");
  compute->add_option("--metric", co.cfg.metric, "distance metric")
      ->required()
      ->transform(CLI::CheckedTransformer(kMetricNames));
  compute->add_option("--precision", co.cfg.precision, "kernel scalar type")
      ->transform(CLI::CheckedTransformer(kPrecisionNames))
      ->default_str("fp64");
  compute->add_option("--variant", co.cfg.variant, "kernel loop structure")
      ->transform(CLI::CheckedTransformer(kVariantNames))
      ->default_str("tiled");
  compute->add_option("--batch-size", co.cfg.batch_capacity, "embedding rows per pass")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  compute->add_option("--step-size", co.cfg.step_size,
                      "sample tile width (default 16 fp64, 32 fp32)")
      ->check(CLI::PositiveNumber);
  compute->add_option("--stripes", co.stripe_range,
                      "compute only stripes start:stop and write a .strf file")
      ->check(CLI::Validator(
          [](std::string& s) -> std::string {
            const std::size_t colon = s.find(':');
            if (colon == std::string::npos || colon == 0 || colon + 1 == s.size())
              return "expected start:stop";
            for (std::size_t i = 0; i < s.size(); ++i)
              if (i != colon && (s[i] < '0' || s[i] > '9')) return "expected start:stop";
            return {};
          },
          "RANGE"));
  compute->add_option("--threads", co.threads, "worker threads")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  compute->add_option("--seed", co.seed, "recorded in the run manifest")
      ->capture_default_str();
  compute->add_option("--out", co.out_path, "output path")->required();

  MergeOpts mo;
  auto* merge = app.add_subcommand("merge", "condense stripe files into a matrix TSV");
  merge->add_option("parts", mo.parts, "stripe (.strf) files")
      ->required()
      ->expected(-1);
  merge->add_option("--table", mo.table_path,
                    "original feature table, for sample ids in the header");
  merge->add_option("--table-format", mo.format, "table file layout")
      ->transform(CLI::CheckedTransformer(kFormatNames))
      ->default_str("tsv-dense");
  merge->add_option("--out", mo.out_path, "output TSV path")->required();

  CompareOpts po;
  auto* compare = app.add_subcommand("compare", "Mantel test between two matrix TSVs");
  compare->add_option("matrix1", po.m1_path, "first matrix TSV")->required();
  compare->add_option("matrix2", po.m2_path, "second matrix TSV")->required();
  compare->add_option("--permutations", po.permutations, "permutation count")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  compare->add_option("--seed", po.seed, "permutation RNG seed")->capture_default_str();

  BenchOpts bo;
  auto* bench = app.add_subcommand("bench", "time the kernel variants on synthetic data");
  bench->add_option("--n", bo.n_samples, "sample count")
      ->check(CLI::Range(2, 1 << 20))
      ->capture_default_str();
  bench->add_option("--features", bo.n_leaves, "tree leaf count")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bench->add_option("--metric", bo.cfg.metric, "distance metric")
      ->transform(CLI::CheckedTransformer(kMetricNames))
      ->default_str("unweighted");
  bench->add_option("--precision", bo.cfg.precision, "kernel scalar type")
      ->transform(CLI::CheckedTransformer(kPrecisionNames))
      ->default_str("fp64");
  bench->add_option("--batch-size", bo.cfg.batch_capacity, "embedding rows per pass")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bench->add_option("--step-size", bo.cfg.step_size, "sample tile width")
      ->check(CLI::PositiveNumber);
  bench->add_option("--variants", bo.variants, "variants to time")
      ->transform(CLI::CheckedTransformer(kVariantNames))
      ->delimiter(',');
  bench->add_option("--repeat", bo.repeats, "repeats per variant")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bench->add_option("--density", bo.density, "table fill fraction")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  bench->add_option("--threads", bo.threads, "worker threads")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bench->add_option("--seed", bo.seed, "instance generator seed")->capture_default_str();

  try {
    app.parse(argc, const_cast<char**>(argv));
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*compute) run_compute(co);
    if (*merge) run_merge(mo);
    if (*compare) run_compare(po);
    if (*bench) run_bench(bo);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "%s: error: %s\n", kToolName.data(), e.what());
    return 1;
  }
  return 0;
}

int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.push_back("stripefrac");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace stripefrac
