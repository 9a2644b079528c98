#include "doctest.h"

#include <algorithm>
#include <random>
#include <sstream>

#include "stripefrac/synth.hpp"
#include "stripefrac/table.hpp"

using namespace stripefrac;

namespace {

SampleTable from_string(const std::string& text, TableFormat fmt) {
  std::istringstream in(text);
  return load_table(in, fmt);
}

bool same_table(const SampleTable& a, const SampleTable& b) {
  return a.sample_ids == b.sample_ids && a.feature_ids == b.feature_ids &&
         a.entries == b.entries;
}

}  // namespace

TEST_CASE("dense tables parse and drop explicit zeros") {
  const SampleTable t = from_string(
      "#id\ts1\ts2\ts3\n"
      "fA\t1\t0\t2\n"
      "fB\t3\t4\t0\n",
      TableFormat::TsvDense);
  CHECK(t.sample_ids == std::vector<std::string>{"s1", "s2", "s3"});
  CHECK(t.feature_ids == std::vector<std::string>{"fA", "fB"});
  REQUIRE(t.entries.size() == 2);
  CHECK(t.entries[0] == std::vector<std::pair<int, double>>{{0, 1.0}, {2, 2.0}});
  CHECK(t.entries[1] == std::vector<std::pair<int, double>>{{0, 3.0}, {1, 4.0}});
  CHECK(t.sample_totals == std::vector<double>{4.0, 4.0, 2.0});
}

TEST_CASE("dense tables reject structural problems") {
  // ragged row
  CHECK_THROWS_AS(from_string("#id\ts1\ts2\nfA\t1\n", TableFormat::TsvDense), Error);
  // missing #id sentinel
  CHECK_THROWS_AS(from_string("id\ts1\nfA\t1\n", TableFormat::TsvDense), Error);
  // negative and non-numeric counts
  CHECK_THROWS_AS(from_string("#id\ts1\nfA\t-1\n", TableFormat::TsvDense), Error);
  CHECK_THROWS_AS(from_string("#id\ts1\nfA\tx\n", TableFormat::TsvDense), Error);
  CHECK_THROWS_AS(from_string("#id\ts1\nfA\tnan\n", TableFormat::TsvDense), Error);
  // duplicate ids
  CHECK_THROWS_AS(from_string("#id\ts1\ts1\nfA\t1\t1\n", TableFormat::TsvDense), Error);
  CHECK_THROWS_AS(from_string("#id\ts1\nfA\t1\nfA\t2\n", TableFormat::TsvDense), Error);
  // a sample with no counts at all is meaningless for relative abundance
  CHECK_THROWS_AS(from_string("#id\ts1\ts2\nfA\t1\t0\n", TableFormat::TsvDense), Error);
  // empty file
  CHECK_THROWS_AS(from_string("", TableFormat::TsvDense), Error);
}

TEST_CASE("sparse triplets parse, sum duplicates, and sort features") {
  const SampleTable t = from_string(
      "fB\ts1\t3\n"
      "fA\ts2\t2\n"
      "fA\ts1\t1\n"
      "fA\ts1\t0.5\n",  // duplicate (fA, s1) accumulates
      TableFormat::TsvSparse);
  CHECK(t.sample_ids == std::vector<std::string>{"s1", "s2"});  // first appearance
  CHECK(t.feature_ids == std::vector<std::string>{"fA", "fB"});  // sorted
  CHECK(t.entries[0] == std::vector<std::pair<int, double>>{{0, 1.5}, {1, 2.0}});
  CHECK(t.entries[1] == std::vector<std::pair<int, double>>{{0, 3.0}});
}

TEST_CASE("a #samples header pins sample order") {
  const SampleTable t = from_string(
      "#samples\tsX\tsY\tsZ\n"
      "fA\tsZ\t1\n"
      "fA\tsX\t2\n"
      "fB\tsY\t4\n",
      TableFormat::TsvSparse);
  CHECK(t.sample_ids == std::vector<std::string>{"sX", "sY", "sZ"});
  CHECK(t.entries[0] == std::vector<std::pair<int, double>>{{0, 2.0}, {2, 1.0}});
  // a sample outside the header is an error
  CHECK_THROWS_AS(from_string("#samples\tsX\nfA\tsQ\t1\n", TableFormat::TsvSparse), Error);
  // a header sample with no counts is an empty sample
  CHECK_THROWS_AS(from_string("#samples\tsX\tsY\nfA\tsX\t1\n", TableFormat::TsvSparse),
                  Error);
}

TEST_CASE("sparse loading is insensitive to triplet order") {
  std::vector<std::string> lines = {
      "fC\ts2\t7",   "fA\ts1\t1",   "fB\ts3\t2.5", "fA\ts3\t4",
      "fC\ts1\t0.5", "fB\ts2\t1.25"};
  const std::string header = "#samples\ts1\ts2\ts3\n";
  auto build = [&](const std::vector<std::string>& ordered) {
    std::string text = header;
    for (const auto& l : ordered) text += l + "\n";
    return from_string(text, TableFormat::TsvSparse);
  };
  const SampleTable ref = build(lines);
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 20; ++rep) {
    std::shuffle(lines.begin(), lines.end(), rng);
    CHECK(same_table(ref, build(lines)));
  }
}

TEST_CASE("sparse rejects malformed rows") {
  CHECK_THROWS_AS(from_string("fA\ts1\n", TableFormat::TsvSparse), Error);
  CHECK_THROWS_AS(from_string("fA\ts1\t1\textra\n", TableFormat::TsvSparse), Error);
  CHECK_THROWS_AS(from_string("fA\ts1\t-3\n", TableFormat::TsvSparse), Error);
  CHECK_THROWS_AS(from_string("\ts1\t3\n", TableFormat::TsvSparse), Error);
  CHECK_THROWS_AS(from_string("", TableFormat::TsvSparse), Error);
  // a sample seen only with zero counts is empty
  CHECK_THROWS_AS(from_string("fA\ts1\t0\nfB\ts2\t1\n", TableFormat::TsvSparse), Error);
}

TEST_CASE("relative abundance columns sum to one") {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 10; ++rep) {
    std::uniform_int_distribution<int> ns(1, 20), nf(1, 30);
    std::vector<std::string> features;
    const int F = nf(rng);
    for (int f = 0; f < F; ++f) features.push_back("f" + std::to_string(f));
    const SampleTable t = random_table(rng, ns(rng), features, 0.4);
    const RowMatrix<double> ra = relative_abundance(t);
    for (int s = 0; s < t.n_samples(); ++s)
      CHECK(std::abs(ra.col(s).sum() - 1.0) <= 1e-12);
    CHECK((ra.array() >= 0.0).all());
  }
}

TEST_CASE("presence is 0/1 and idempotent") {
  std::mt19937_64 rng(13);
  std::vector<std::string> features{"a", "b", "c", "d", "e"};
  const SampleTable t = random_table(rng, 9, features, 0.5);
  const RowMatrix<double> p1 = presence(t);
  CHECK(((p1.array() == 0.0) || (p1.array() == 1.0)).all());
  // rebuild a table from the presence values; its presence is unchanged
  const SampleTable t2 = make_table(t.sample_ids, t.feature_ids, p1);
  CHECK((presence(t2).array() == p1.array()).all());
}

TEST_CASE("make_table validates shapes and values") {
  RowMatrix<double> counts(2, 2);
  counts << 1.0, 0.0, 0.0, 2.0;
  const SampleTable t = make_table({"s1", "s2"}, {"f1", "f2"}, counts);
  CHECK(t.entries[0] == std::vector<std::pair<int, double>>{{0, 1.0}});
  CHECK_THROWS_AS(make_table({"s1"}, {"f1", "f2"}, counts), Error);
  RowMatrix<double> bad(1, 1);
  bad << -1.0;
  CHECK_THROWS_AS(make_table({"s1"}, {"f1"}, bad), Error);
}

TEST_CASE("dense and sparse layouts of the same data load identically") {
  const SampleTable dense = from_string(
      "#id\ts1\ts2\n"
      "fA\t1.5\t0\n"
      "fB\t0\t2\n"
      "fC\t3\t4\n",
      TableFormat::TsvDense);
  const SampleTable sparse = from_string(
      "#samples\ts1\ts2\n"
      "fA\ts1\t1.5\n"
      "fB\ts2\t2\n"
      "fC\ts1\t3\n"
      "fC\ts2\t4\n",
      TableFormat::TsvSparse);
  CHECK(same_table(dense, sparse));
  CHECK(dense.sample_totals == sparse.sample_totals);
}
