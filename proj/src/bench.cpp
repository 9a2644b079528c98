#include "stripefrac/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>

namespace stripefrac {

namespace {

template <class Real>
double timed_run(const PhyloTree& tree, const SampleTable& table,
                 const KernelConfig& cfg, int threads, KernelCounters& counters) {
  const auto t0 = std::chrono::steady_clock::now();
  auto set = compute_unifrac<Real>(tree, table, cfg, 0, -1, threads, &counters);
  const auto t1 = std::chrono::steady_clock::now();
  // keep the result alive so the compute cannot be elided
  volatile Real sink = set.distances(0, 0);
  (void)sink;
  return std::chrono::duration<double>(t1 - t0).count();
}

}  // namespace

std::vector<BenchRun> bench_variants(const PhyloTree& tree, const SampleTable& table,
                                     const KernelConfig& base,
                                     const std::vector<Variant>& variants,
                                     int repeats, int threads) {
  if (repeats < 1) throw Error("bench: need at least one repeat");
  std::vector<BenchRun> out;
  for (Variant v : variants) {
    KernelConfig cfg = base;
    cfg.variant = v;
    BenchRun run;
    run.variant = v;
    std::vector<double> times;
    for (int rep = 0; rep < repeats; ++rep) {
      KernelCounters counters;
      const double secs = base.precision == Precision::Fp32
                              ? timed_run<float>(tree, table, cfg, threads, counters)
                              : timed_run<double>(tree, table, cfg, threads, counters);
      times.push_back(secs);
      run.counters = counters;
    }
    std::sort(times.begin(), times.end());
    run.best_seconds = times.front();
    run.median_seconds = times[times.size() / 2];
    const std::uint64_t entries =
        static_cast<std::uint64_t>(total_stripes(table.n_samples())) *
        static_cast<std::uint64_t>(table.n_samples());
    run.writes_per_entry =
        static_cast<double>(run.counters.accumulator_writes) / static_cast<double>(entries);
    out.push_back(run);
  }
  return out;
}

std::string format_bench_table(const std::vector<BenchRun>& runs) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-9s %12s %12s %16s %14s %8s\n", "variant",
                "best(s)", "median(s)", "acc_writes", "writes/entry", "passes");
  out += line;
  for (const auto& r : runs) {
    std::snprintf(line, sizeof(line), "%-9s %12.4f %12.4f %16llu %14.2f %8llu\n",
                  std::string(name(r.variant)).c_str(), r.best_seconds, r.median_seconds,
                  static_cast<unsigned long long>(r.counters.accumulator_writes),
                  r.writes_per_entry,
                  static_cast<unsigned long long>(r.counters.kernel_passes));
    out += line;
  }
  return out;
}

}  // namespace stripefrac
