#include "stripefrac/embed.hpp"

#include <algorithm>
#include <unordered_set>

namespace stripefrac {

PhyloTree sheared_to_table(const PhyloTree& tree, const SampleTable& table) {
  std::unordered_set<std::string> leaves(tree.leaf_names.begin(), tree.leaf_names.end());
  for (const auto& f : table.feature_ids)
    if (!leaves.count(f))
      throw Error("table feature '" + f + "' is not a leaf of the tree");
  if (table.n_features() == tree.n_leaves()) return tree;  // same set, no shear
  return shear(tree, table.feature_ids);
}

Embedder::Embedder(const PhyloTree& tree, const SampleTable& table, EmbedMode mode,
                   int pad_multiple)
    : tree_(tree), mode_(mode), n_samples_(table.n_samples()) {
  if (pad_multiple < 1) throw Error("pad multiple must be >= 1");
  padded_ = round_up(n_samples_, pad_multiple);

  std::unordered_map<std::string, int> feature_idx;
  for (int f = 0; f < table.n_features(); ++f)
    feature_idx.emplace(table.feature_ids[static_cast<std::size_t>(f)], f);
  if (table.n_features() != tree.n_leaves())
    throw Error("tree leaves and table features differ; shear the tree first");

  leaf_feature_.assign(static_cast<std::size_t>(tree.n_nodes()), -1);
  for (int i = 0; i < tree.n_nodes(); ++i) {
    if (!tree.is_leaf(i)) continue;
    auto it = feature_idx.find(tree.nodes[static_cast<std::size_t>(i)].name);
    if (it == feature_idx.end())
      throw Error("tree leaf '" + tree.nodes[static_cast<std::size_t>(i)].name +
                  "' is not a table feature; shear the tree first");
    leaf_feature_[static_cast<std::size_t>(i)] = it->second;
  }

  leaf_rows_ = mode_ == EmbedMode::Weighted ? relative_abundance(table) : presence(table);
}

std::optional<EmbeddingBatch<double>> Embedder::next_batch(int capacity) {
  if (capacity < 1) throw Error("batch capacity must be >= 1");
  const std::size_t remaining = tree_.postorder.size() - cursor_;
  if (remaining == 0) return std::nullopt;
  const int take = static_cast<int>(std::min<std::size_t>(
      static_cast<std::size_t>(capacity), remaining));

  EmbeddingBatch<double> batch;
  batch.filled = take;
  batch.n_samples = n_samples_;
  batch.n_samples_padded = padded_;
  batch.emb = RowMatrix<double>::Zero(take, padded_);
  batch.lengths.resize(take);

  for (int r = 0; r < take; ++r) {
    const int node = tree_.postorder[cursor_++];
    auto row = batch.emb.row(r).head(n_samples_);
    if (tree_.is_leaf(node)) {
      row = leaf_rows_.row(leaf_feature_[static_cast<std::size_t>(node)]);
    } else {
      auto it = pending_.find(node);
      if (it == pending_.end()) throw Error("internal node emitted before its children");
      row = it->second;
      pending_.erase(it);
    }
    batch.lengths[r] = tree_.nodes[static_cast<std::size_t>(node)].length;

    // Fold into the parent unless the parent is the root (the root row is
    // never emitted: its value is constant across samples and cancels).
    const int parent = tree_.nodes[static_cast<std::size_t>(node)].parent;
    if (parent != tree_.root) {
      auto [slot, fresh] = pending_.try_emplace(parent,
                                                Eigen::RowVectorXd::Zero(n_samples_));
      if (mode_ == EmbedMode::Weighted)
        slot->second += row;
      else
        slot->second = slot->second.cwiseMax(row);  // OR on 0/1 rows
    }
  }
  return batch;
}

}  // namespace stripefrac
