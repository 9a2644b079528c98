#pragma once

#include <optional>
#include <unordered_map>

#include "stripefrac/common.hpp"
#include "stripefrac/newick.hpp"
#include "stripefrac/table.hpp"

namespace stripefrac {

/*
 * A batch of embedding rows: one row per tree node (post-order, root
 * excluded), each row the per-sample value of that node — relative abundance
 * summed over descendant leaves for weighted metrics, presence OR'd for the
 * unweighted one. Rows are padded on the right with zeros to a step-size
 * multiple so tiled kernels never read past the end.
 */
template <class Real>
struct EmbeddingBatch {
  RowMatrix<Real> emb;     // filled x n_samples_padded
  Vector<Real> lengths;    // branch length per row
  int filled = 0;          // rows actually populated, >= 1 once emitted
  int n_samples = 0;
  int n_samples_padded = 0;
};

enum class EmbedMode { Unweighted, Weighted };

inline EmbedMode embed_mode(Metric m) {
  return m == Metric::Unweighted ? EmbedMode::Unweighted : EmbedMode::Weighted;
}

// Error if the table mentions features missing from the tree; shear the tree
// down when it has extra leaves; otherwise an unchanged copy.
PhyloTree sheared_to_table(const PhyloTree& tree, const SampleTable& table);

/*
 * Single-consumer cursor over the post-order embedding rows. Each child row
 * is produced exactly once and folded into its parent's pending value as it
 * is emitted, so peak memory is one batch plus the pending internal rows.
 * Batch boundaries never change row content.
 */
class Embedder {
 public:
  // The tree's leaf set must equal the table's feature set (shear first).
  Embedder(const PhyloTree& tree, const SampleTable& table, EmbedMode mode,
           int pad_multiple = 1);

  // Up to `capacity` (>= 1) more rows; std::nullopt once exhausted.
  std::optional<EmbeddingBatch<double>> next_batch(int capacity);

  int total_rows() const { return static_cast<int>(tree_.postorder.size()); }
  int rows_emitted() const { return static_cast<int>(cursor_); }
  int n_samples() const { return n_samples_; }
  int n_samples_padded() const { return padded_; }

 private:
  const PhyloTree& tree_;
  EmbedMode mode_;
  int n_samples_ = 0;
  int padded_ = 0;
  RowMatrix<double> leaf_rows_;                     // features x samples
  std::vector<int> leaf_feature_;                   // node -> feature row, -1 for internals
  std::unordered_map<int, Eigen::RowVectorXd> pending_;  // internal node -> partial sum
  std::size_t cursor_ = 0;
};

// fp32 kernels consume a converted copy; the double batch is the source of
// truth and conversion happens once per batch.
template <class Real>
EmbeddingBatch<Real> cast_batch(const EmbeddingBatch<double>& b) {
  if constexpr (std::is_same_v<Real, double>) {
    return b;
  } else {
    EmbeddingBatch<Real> out;
    out.emb = b.emb.template cast<Real>();
    out.lengths = b.lengths.template cast<Real>();
    out.filled = b.filled;
    out.n_samples = b.n_samples;
    out.n_samples_padded = b.n_samples_padded;
    return out;
  }
}

}  // namespace stripefrac
