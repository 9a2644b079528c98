#include "doctest.h"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <random>

#include "stripefrac/stripes.hpp"

using namespace stripefrac;

TEST_CASE("stripe counts and pair addressing") {
  CHECK_THROWS_AS(total_stripes(0), Error);
  CHECK_THROWS_AS(total_stripes(1), Error);
  CHECK(total_stripes(2) == 1);
  CHECK(total_stripes(5) == 2);
  CHECK(total_stripes(6) == 3);
  CHECK(total_stripes(64) == 32);

  CHECK(stripe_pair(5, 0, 0) == std::pair<int, int>{0, 1});
  CHECK(stripe_pair(5, 0, 4) == std::pair<int, int>{4, 0});  // wraparound
  CHECK(stripe_pair(5, 1, 3) == std::pair<int, int>{3, 0});
  CHECK(stripe_pair(6, 2, 5) == std::pair<int, int>{5, 2});
  CHECK_THROWS_AS(stripe_pair(6, 3, 0), Error);
  CHECK_THROWS_AS(stripe_pair(6, 0, 6), Error);
}

TEST_CASE("stripes cover every unordered pair, duplicating only the even tail") {
  for (int n = 2; n <= 64; ++n) {
    CAPTURE(n);
    const int S = total_stripes(n);
    std::map<std::pair<int, int>, std::vector<int>> hits;  // pair -> stripes seen
    for (int s = 0; s < S; ++s)
      for (int k = 0; k < n; ++k) {
        auto [a, b] = stripe_pair(n, s, k);
        REQUIRE(a != b);
        if (a > b) std::swap(a, b);
        hits[{a, b}].push_back(s);
      }
    REQUIRE(static_cast<int>(hits.size()) == n * (n - 1) / 2);  // every pair
    int doubled = 0;
    for (const auto& [pair, stripes] : hits) {
      if (n % 2 == 1) {
        CHECK(stripes.size() == 1);
      } else {
        CHECK((stripes.size() == 1 || stripes.size() == 2));
        if (stripes.size() == 2) {
          ++doubled;
          CHECK(stripes[0] == S - 1);  // duplicates live in the last stripe only
          CHECK(stripes[1] == S - 1);
        }
      }
    }
    if (n % 2 == 0) CHECK(doubled == n / 2);
  }
}

TEST_CASE("allocation shapes follow the metric") {
  const auto wu = allocate_stripes<double>(10, 1, 4, Metric::WeightedUnnormalized);
  CHECK(wu.distances.rows() == 3);
  CHECK(wu.distances.cols() == 10);
  CHECK(wu.totals.size() == 0);
  CHECK_FALSE(wu.has_totals());
  CHECK_FALSE(wu.finalized);

  const auto uw = allocate_stripes<float>(10, 0, 5, Metric::Unweighted);
  CHECK(uw.totals.rows() == 5);
  CHECK(uw.has_totals());

  CHECK_THROWS_AS(allocate_stripes<double>(10, 3, 3, Metric::Unweighted), Error);
  CHECK_THROWS_AS(allocate_stripes<double>(10, 0, 6, Metric::Unweighted), Error);
  CHECK_THROWS_AS(allocate_stripes<double>(10, -1, 2, Metric::Unweighted), Error);
  CHECK_THROWS_AS(allocate_stripes<double>(1, 0, 1, Metric::Unweighted), Error);
}

namespace {

// Build finalized stripe sets for a symmetric matrix by direct addressing —
// no kernels involved.
std::vector<StripeSet<double>> stripes_of(const RowMatrix<double>& m,
                                          const std::vector<std::pair<int, int>>& ranges,
                                          Metric metric = Metric::WeightedUnnormalized) {
  const int n = static_cast<int>(m.rows());
  std::vector<StripeSet<double>> parts;
  for (auto [a, b] : ranges) {
    auto set = allocate_stripes<double>(n, a, b, metric);
    for (int s = a; s < b; ++s)
      for (int k = 0; k < n; ++k) {
        auto [i, j] = stripe_pair(n, s, k);
        set.distances(s - a, k) = m(i, j);
        if (set.has_totals()) set.totals(s - a, k) = 1.0;
      }
    set.finalized = true;
    parts.push_back(std::move(set));
  }
  return parts;
}

RowMatrix<double> random_symmetric(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(0.0, 3.0);
  RowMatrix<double> m = RowMatrix<double>::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      m(i, j) = u(rng);
      m(j, i) = m(i, j);
    }
  return m;
}

}  // namespace

TEST_CASE("condense rebuilds the full matrix from any exact tiling") {
  std::mt19937_64 rng(17);
  for (int n : {2, 5, 8, 13, 16}) {
    CAPTURE(n);
    const RowMatrix<double> m = random_symmetric(rng, n);
    const int S = total_stripes(n);
    std::vector<std::vector<std::pair<int, int>>> tilings = {{{0, S}}};
    if (S >= 2) tilings.push_back({{0, S / 2}, {S / 2, S}});
    if (S >= 3) tilings.push_back({{1, S}, {0, 1}});  // order does not matter
    for (const auto& ranges : tilings) {
      const DistanceMatrix dm = condense(stripes_of(m, ranges));
      CHECK((dm.values.array() == m.array()).all());
      CHECK(dm.values.diagonal().cwiseAbs().maxCoeff() == 0.0);
      CHECK(dm.precision == Precision::Fp64);
      CHECK(dm.sample_ids.size() == static_cast<std::size_t>(n));
    }
  }
}

TEST_CASE("condense rejects gaps, overlaps, and mismatches") {
  std::mt19937_64 rng(19);
  const RowMatrix<double> m = random_symmetric(rng, 12);  // S = 6
  CHECK_THROWS_WITH_AS(condense(stripes_of(m, {{0, 2}, {3, 6}})),
                       doctest::Contains("gap"), Error);
  CHECK_THROWS_WITH_AS(condense(stripes_of(m, {{0, 3}, {2, 6}})),
                       doctest::Contains("overlap"), Error);
  CHECK_THROWS_WITH_AS(condense(stripes_of(m, {{0, 5}})), doctest::Contains("gap"), Error);
  CHECK_THROWS_AS(condense(std::vector<StripeSet<double>>{}), Error);

  auto unfinalized = stripes_of(m, {{0, 6}});
  unfinalized[0].finalized = false;
  CHECK_THROWS_AS(condense(unfinalized), Error);

  auto mixed = stripes_of(m, {{0, 3}});
  auto other = stripes_of(m, {{3, 6}}, Metric::Unweighted);
  mixed.push_back(std::move(other[0]));
  CHECK_THROWS_AS(condense(mixed), Error);

  // even n: the doubled slots in the last stripe must agree exactly
  auto tampered = stripes_of(m, {{0, 6}});
  tampered[0].distances(5, 7) += 1e-9;  // slot k=7 duplicates k=1 in stripe 5
  CHECK_THROWS_WITH_AS(condense(tampered), doctest::Contains("duplicated"), Error);
}

TEST_CASE("condense accepts matching sample ids and rejects wrong counts") {
  std::mt19937_64 rng(23);
  const RowMatrix<double> m = random_symmetric(rng, 4);
  const auto parts = stripes_of(m, {{0, 2}});
  const DistanceMatrix dm = condense(parts, {"w", "x", "y", "z"});
  CHECK(dm.sample_ids == std::vector<std::string>{"w", "x", "y", "z"});
  CHECK_THROWS_AS(condense(parts, {"w", "x"}), Error);
}

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("stripefrac_test_" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("stripe files round-trip both precisions") {
  TempDir tmp;
  std::mt19937_64 rng(29);
  const RowMatrix<double> m = random_symmetric(rng, 9);

  SUBCASE("fp64 with totals") {
    auto parts = stripes_of(m, {{1, 3}}, Metric::WeightedNormalized);
    const std::string path = tmp.file("part.strf");
    write_stripe_file(path, parts[0]);
    const AnyStripeSet any = read_stripe_file(path);
    REQUIRE(std::holds_alternative<StripeSet<double>>(any));
    const auto& got = std::get<StripeSet<double>>(any);
    CHECK(got.n_samples == 9);
    CHECK(got.start == 1);
    CHECK(got.stop == 3);
    CHECK(got.metric == Metric::WeightedNormalized);
    CHECK(got.finalized);
    CHECK((got.distances.array() == parts[0].distances.array()).all());
    CHECK((got.totals.array() == parts[0].totals.array()).all());
  }

  SUBCASE("fp32 without totals") {
    auto set = allocate_stripes<float>(6, 0, 3, Metric::WeightedUnnormalized);
    std::uniform_real_distribution<float> u(0.0f, 2.0f);
    for (Eigen::Index i = 0; i < set.distances.size(); ++i)
      set.distances.data()[i] = u(rng);
    set.finalized = true;
    const std::string path = tmp.file("part32.strf");
    write_stripe_file(path, set);
    const AnyStripeSet any = read_stripe_file(path);
    REQUIRE(std::holds_alternative<StripeSet<float>>(any));
    const auto& got = std::get<StripeSet<float>>(any);
    CHECK(got.totals.size() == 0);
    CHECK((got.distances.array() == set.distances.array()).all());
  }
}

TEST_CASE("stripe files reject unfinalized sets and corruption") {
  TempDir tmp;
  std::mt19937_64 rng(31);
  const RowMatrix<double> m = random_symmetric(rng, 8);
  auto parts = stripes_of(m, {{0, 4}});

  auto raw = parts[0];
  raw.finalized = false;
  CHECK_THROWS_AS(write_stripe_file(tmp.file("x.strf"), raw), Error);

  const std::string path = tmp.file("good.strf");
  write_stripe_file(path, parts[0]);

  auto clobber = [&](const std::string& dst, long at, char delta, long truncate = -1) {
    std::ifstream in(path, std::ios::binary);
    std::string blob((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    if (at >= 0) blob[static_cast<std::size_t>(at)] =
        static_cast<char>(blob[static_cast<std::size_t>(at)] + delta);
    if (truncate >= 0) blob.resize(static_cast<std::size_t>(truncate));
    std::ofstream out(dst, std::ios::binary | std::ios::trunc);
    out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  };

  // flip one payload byte: checksum must catch it
  clobber(tmp.file("corrupt.strf"), 40, 1);
  CHECK_THROWS_WITH_AS(read_stripe_file(tmp.file("corrupt.strf")),
                       doctest::Contains("checksum"), Error);
  // bad magic
  clobber(tmp.file("magic.strf"), 0, 1);
  CHECK_THROWS_WITH_AS(read_stripe_file(tmp.file("magic.strf")),
                       doctest::Contains("magic"), Error);
  // truncation
  clobber(tmp.file("short.strf"), -1, 0, 20);
  CHECK_THROWS_AS(read_stripe_file(tmp.file("short.strf")), Error);
  clobber(tmp.file("shorter.strf"), -1, 0, 100);
  CHECK_THROWS_AS(read_stripe_file(tmp.file("shorter.strf")), Error);

  CHECK_THROWS_AS(read_stripe_file(tmp.file("missing.strf")), Error);
}

TEST_CASE("merging stripe files equals condensing in memory") {
  TempDir tmp;
  std::mt19937_64 rng(37);
  const RowMatrix<double> m = random_symmetric(rng, 11);  // S = 5
  auto parts = stripes_of(m, {{0, 2}, {2, 5}});
  write_stripe_file(tmp.file("a.strf"), parts[0]);
  write_stripe_file(tmp.file("b.strf"), parts[1]);

  const DistanceMatrix merged =
      merge_stripe_files({tmp.file("b.strf"), tmp.file("a.strf")});
  CHECK((merged.values.array() == m.array()).all());

  // ranges that do not tile are rejected with the offending range named
  CHECK_THROWS_WITH_AS(merge_stripe_files({tmp.file("a.strf")}),
                       doctest::Contains("gap"), Error);

  // mixing precisions is rejected
  auto set32 = allocate_stripes<float>(11, 2, 5, Metric::WeightedUnnormalized);
  set32.finalized = true;
  write_stripe_file(tmp.file("c32.strf"), set32);
  CHECK_THROWS_WITH_AS(merge_stripe_files({tmp.file("a.strf"), tmp.file("c32.strf")}),
                       doctest::Contains("precision"), Error);
}

TEST_CASE("matrix TSV round-trips with full precision") {
  std::mt19937_64 rng(41);
  const RowMatrix<double> m = random_symmetric(rng, 7);
  DistanceMatrix dm;
  dm.values = m;
  dm.precision = Precision::Fp64;
  for (int i = 0; i < 7; ++i) dm.sample_ids.push_back("sample_" + std::to_string(i));

  TempDir tmp;
  const std::string path = tmp.file("m.tsv");
  write_tsv(path, dm);
  const DistanceMatrix back = read_tsv_file(path);
  CHECK(back.sample_ids == dm.sample_ids);
  CHECK((back.values.array() == dm.values.array()).all());  // 17 digits round-trip

  const std::string text = to_tsv(dm);
  CHECK(text.find("sample_0\tsample_1") == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 8);  // header + 7 rows
}

TEST_CASE("TSV reading rejects ragged and mislabeled matrices") {
  TempDir tmp;
  auto write_text = [&](const std::string& name, const std::string& text) {
    std::ofstream out(tmp.file(name), std::ios::binary);
    out << text;
    return tmp.file(name);
  };
  CHECK_THROWS_AS(read_tsv_file(write_text("short.tsv", "a\tb\na\t0\t1\n")), Error);
  CHECK_THROWS_AS(read_tsv_file(write_text("wide.tsv", "a\tb\na\t0\t1\t2\nb\t1\t0\n")),
                  Error);
  CHECK_THROWS_AS(
      read_tsv_file(write_text("ids.tsv", "a\tb\nX\t0\t1\nb\t1\t0\n")), Error);
  CHECK_THROWS_AS(
      read_tsv_file(write_text("val.tsv", "a\tb\na\t0\tzz\nb\t1\t0\n")), Error);
  CHECK_THROWS_AS(read_tsv_file(write_text("empty.tsv", "")), Error);
}
