#pragma once

#include <cstdint>
#include <random>

#include "stripefrac/newick.hpp"
#include "stripefrac/table.hpp"

namespace stripefrac {

// Random rooted bifurcating tree over n_leaves leaves named f0..f{n-1}:
// repeatedly joins two random subtrees, branch lengths U[0, 2). A tree with
// F leaves has 2F-1 nodes, hence 2F-2 embedding rows.
PhyloTree random_tree(std::mt19937_64& rng, int n_leaves);

// Sparse random counts over the given features; every sample is guaranteed
// at least one positive count. Sample ids are s0..s{n-1}.
SampleTable random_table(std::mt19937_64& rng, int n_samples,
                         const std::vector<std::string>& features, double density);

struct SynthInstance {
  PhyloTree tree;
  SampleTable table;
};

// Deterministic instance from a seed. When table_features > 0 the table uses
// only that many of the tree's leaves, so consumers must shear.
SynthInstance random_instance(std::uint64_t seed, int n_samples, int n_leaves,
                              double density = 0.3, int table_features = 0);

}  // namespace stripefrac
