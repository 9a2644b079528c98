#pragma once

#include <cstdint>

#include "stripefrac/common.hpp"
#include "stripefrac/newick.hpp"
#include "stripefrac/stripes.hpp"
#include "stripefrac/table.hpp"

namespace stripefrac {

/*
 * Reference implementation by the textbook definition: per-node per-sample
 * values come from walking each node's descendant leaves directly, and every
 * sample pair is a plain loop over all non-root nodes. Shares no stripe,
 * batch or kernel machinery with the fast path; quadratic and proud of it.
 */
DistanceMatrix brute_force_unifrac(const PhyloTree& tree, const SampleTable& table,
                                   Metric metric);

// Row-major upper triangle (i < j) of a square symmetric matrix; off-diagonal
// asymmetry beyond 1e-12 is an error.
Vector<double> condensed_upper(const DistanceMatrix& dm);

struct MantelResult {
  double r = 0.0;
  double r_squared = 0.0;
  double p_value = 1.0;
  int permutations = 0;
  std::uint64_t seed = 0;
};

/*
 * Mantel test: Pearson correlation between the condensed upper triangles,
 * with a one-sided permutation p-value. Permutation i relabels the samples
 * of the second matrix (rows and columns together) with an mt19937_64
 * shuffle seeded from splitmix64(seed, i), so runs are deterministic for a
 * given seed and permutations are independent of evaluation order.
 * p = (1 + #{r_perm >= r_obs}) / (1 + permutations). A zero-variance
 * triangle has no defined correlation and is an error.
 */
MantelResult mantel(const DistanceMatrix& m1, const DistanceMatrix& m2,
                    int permutations = 999, std::uint64_t seed = 1);

}  // namespace stripefrac
