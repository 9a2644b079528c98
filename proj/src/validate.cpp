#include "stripefrac/validate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <unordered_map>
#include <unordered_set>

namespace stripefrac {

DistanceMatrix brute_force_unifrac(const PhyloTree& tree, const SampleTable& table,
                                   Metric metric) {
  const int n = table.n_samples();
  const int M = tree.n_nodes();

  std::unordered_map<std::string, int> feature_idx;
  for (int f = 0; f < table.n_features(); ++f)
    feature_idx.emplace(table.feature_ids[static_cast<std::size_t>(f)], f);
  std::unordered_set<std::string> leaves(tree.leaf_names.begin(), tree.leaf_names.end());
  for (const auto& f : table.feature_ids)
    if (!leaves.count(f))
      throw Error("table feature '" + f + "' is not a leaf of the tree");

  // Per-node sample values, each node aggregated straight from its own
  // descendant leaves (deliberately no reuse of child rows).
  const bool weighted = metric != Metric::Unweighted;
  RowMatrix<double> X = RowMatrix<double>::Zero(M, n);
  std::vector<int> stack;
  for (int i = 0; i < M; ++i) {
    stack.assign(1, i);
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      for (int c : tree.children[static_cast<std::size_t>(v)]) stack.push_back(c);
      if (!tree.is_leaf(v)) continue;
      auto it = feature_idx.find(tree.nodes[static_cast<std::size_t>(v)].name);
      if (it == feature_idx.end()) continue;  // leaf absent from the table: zero
      for (const auto& [s, c] : table.entries[static_cast<std::size_t>(it->second)]) {
        if (weighted)
          X(i, s) += c / table.sample_totals[static_cast<std::size_t>(s)];
        else
          X(i, s) = 1.0;
      }
    }
  }

  DistanceMatrix dm;
  dm.sample_ids = table.sample_ids;
  dm.precision = Precision::Fp64;
  dm.values = RowMatrix<double>::Zero(n, n);

  for (int j = 0; j < n; ++j) {
    for (int k = j + 1; k < n; ++k) {
      double num = 0.0, den = 0.0;
      for (int i = 0; i < M; ++i) {
        if (i == tree.root) continue;
        const double L = tree.nodes[static_cast<std::size_t>(i)].length;
        const double u = X(i, j), v = X(i, k);
        switch (metric) {
          case Metric::Unweighted:
            if ((u > 0.0) != (v > 0.0)) num += L;
            if (u > 0.0 || v > 0.0) den += L;
            break;
          case Metric::WeightedUnnormalized:
            num += L * std::abs(u - v);
            break;
          case Metric::WeightedNormalized:
            num += L * std::abs(u - v);
            den += L * (u + v);
            break;
        }
      }
      double d = num;
      if (metric != Metric::WeightedUnnormalized) d = den == 0.0 ? 0.0 : num / den;
      dm.values(j, k) = d;
      dm.values(k, j) = d;
    }
  }
  return dm;
}

Vector<double> condensed_upper(const DistanceMatrix& dm) {
  const int n = dm.n();
  if (dm.values.cols() != n) throw Error("distance matrix is not square");
  if (n < 2) throw Error("distance matrix needs at least 2 samples");
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (std::abs(dm.values(i, j) - dm.values(j, i)) > 1e-12)
        throw Error("distance matrix is asymmetric at (" + std::to_string(i) + "," +
                    std::to_string(j) + ")");
  Vector<double> out(static_cast<Eigen::Index>(n) * (n - 1) / 2);
  Eigen::Index at = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) out[at++] = dm.values(i, j);
  return out;
}

namespace {

// splitmix64 stream: decorrelates per-permutation substreams of one seed.
std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace

MantelResult mantel(const DistanceMatrix& m1, const DistanceMatrix& m2,
                    int permutations, std::uint64_t seed) {
  if (permutations < 1) throw Error("mantel: need at least 1 permutation");
  if (m1.n() != m2.n()) throw Error("mantel: matrices have different sizes");
  if (!m1.sample_ids.empty() && !m2.sample_ids.empty() && m1.sample_ids != m2.sample_ids)
    throw Error("mantel: matrices have different sample orderings");

  const Vector<double> x = condensed_upper(m1);
  const Vector<double> y = condensed_upper(m2);

  const double mx = x.mean(), my = y.mean();
  const Vector<double> xc = x.array() - mx;
  const double sxx = xc.squaredNorm();
  const double syy = (y.array() - my).matrix().squaredNorm();
  if (sxx <= 0.0 || syy <= 0.0)
    throw Error("mantel: a distance matrix has zero variance, correlation is undefined");
  const double denom = std::sqrt(sxx * syy);

  const double r = xc.dot((y.array() - my).matrix()) / denom;

  const int n = m1.n();
  std::vector<int> perm(static_cast<std::size_t>(n));
  int exceed = 0;
  for (int p = 0; p < permutations; ++p) {
    std::mt19937_64 rng(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(p) + 1)));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    // Relabeling permutes the condensed multiset, so the mean and variance
    // of y are unchanged; only the cross term needs recomputing.
    double dot = 0.0;
    Eigen::Index at = 0;
    for (int i = 0; i < n; ++i) {
      const int pi = perm[static_cast<std::size_t>(i)];
      for (int j = i + 1; j < n; ++j) {
        const double yv = m2.values(pi, perm[static_cast<std::size_t>(j)]);
        dot += xc[at++] * (yv - my);
      }
    }
    if (dot / denom >= r) ++exceed;
  }

  MantelResult res;
  res.r = r;
  res.r_squared = r * r;
  res.p_value = (1.0 + exceed) / (1.0 + permutations);
  res.permutations = permutations;
  res.seed = seed;
  return res;
}

}  // namespace stripefrac
