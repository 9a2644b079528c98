#include "stripefrac/synth.hpp"

#include <algorithm>
#include <numeric>

namespace stripefrac {

PhyloTree random_tree(std::mt19937_64& rng, int n_leaves) {
  if (n_leaves < 1) throw Error("random_tree: need at least one leaf");
  PhyloTree t;
  std::vector<int> roots;
  for (int f = 0; f < n_leaves; ++f) {
    t.nodes.emplace_back();
    t.nodes.back().name = "f" + std::to_string(f);
    roots.push_back(f);
  }
  std::uniform_real_distribution<double> length(0.0, 2.0);
  while (roots.size() > 1) {
    std::uniform_int_distribution<std::size_t> pick(0, roots.size() - 1);
    std::size_t ia = pick(rng);
    std::swap(roots[ia], roots.back());
    const int a = roots.back();
    roots.pop_back();
    std::uniform_int_distribution<std::size_t> pick2(0, roots.size() - 1);
    std::size_t ib = pick2(rng);
    std::swap(roots[ib], roots.back());
    const int b = roots.back();
    roots.pop_back();

    t.nodes.emplace_back();
    const int join = static_cast<int>(t.nodes.size()) - 1;
    t.nodes[static_cast<std::size_t>(a)].parent = join;
    t.nodes[static_cast<std::size_t>(a)].length = length(rng);
    t.nodes[static_cast<std::size_t>(b)].parent = join;
    t.nodes[static_cast<std::size_t>(b)].length = length(rng);
    roots.push_back(join);
  }
  finalize_topology(t);
  return t;
}

SampleTable random_table(std::mt19937_64& rng, int n_samples,
                         const std::vector<std::string>& features, double density) {
  if (n_samples < 1) throw Error("random_table: need at least one sample");
  if (features.empty()) throw Error("random_table: need at least one feature");
  SampleTable t;
  for (int s = 0; s < n_samples; ++s) t.sample_ids.push_back("s" + std::to_string(s));
  t.feature_ids = features;
  t.entries.resize(features.size());

  std::uniform_real_distribution<double> hit(0.0, 1.0);
  std::uniform_real_distribution<double> count(0.5, 64.0);
  std::uniform_int_distribution<std::size_t> any(0, features.size() - 1);
  for (int s = 0; s < n_samples; ++s) {
    bool nonempty = false;
    for (std::size_t f = 0; f < features.size(); ++f) {
      if (hit(rng) < density) {
        t.entries[f].emplace_back(s, count(rng));
        nonempty = true;
      }
    }
    if (!nonempty) t.entries[any(rng)].emplace_back(s, count(rng));
  }
  t.sample_totals.assign(static_cast<std::size_t>(n_samples), 0.0);
  for (const auto& feat : t.entries)
    for (const auto& [s, c] : feat) t.sample_totals[static_cast<std::size_t>(s)] += c;
  return t;
}

SynthInstance random_instance(std::uint64_t seed, int n_samples, int n_leaves,
                              double density, int table_features) {
  std::mt19937_64 rng(seed);
  SynthInstance inst;
  inst.tree = random_tree(rng, n_leaves);

  std::vector<std::string> features = inst.tree.leaf_names;
  if (table_features > 0 && table_features < n_leaves) {
    std::shuffle(features.begin(), features.end(), rng);
    features.resize(static_cast<std::size_t>(table_features));
  }
  inst.table = random_table(rng, n_samples, features, density);
  return inst;
}

}  // namespace stripefrac
