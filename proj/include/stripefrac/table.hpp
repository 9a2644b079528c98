#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "stripefrac/common.hpp"

namespace stripefrac {

/*
 * Sparse feature-by-sample count table. Explicit zeros are dropped on load;
 * per-feature entries are (sample index, count) with counts finite and > 0,
 * sorted by sample. Every sample must have a positive total.
 */
struct SampleTable {
  std::vector<std::string> sample_ids;
  std::vector<std::string> feature_ids;
  std::vector<std::vector<std::pair<int, double>>> entries;  // one list per feature
  std::vector<double> sample_totals;

  int n_samples() const { return static_cast<int>(sample_ids.size()); }
  int n_features() const { return static_cast<int>(feature_ids.size()); }
};

enum class TableFormat { TsvDense, TsvSparse };

TableFormat table_format_from_name(std::string_view s);

// tsv-dense: header "#id<TAB>sample..." then one row per feature.
// tsv-sparse: optional "#samples<TAB>..." header pinning sample order, then
// "feature<TAB>sample<TAB>value" triplets (duplicates sum; zeros drop; sparse
// feature ids come out sorted so triplet order never matters).
SampleTable load_table(std::istream& in, TableFormat format);
SampleTable load_table_file(const std::string& path, TableFormat format);

// Build a table directly from dense counts (used by generators and tests).
SampleTable make_table(std::vector<std::string> sample_ids,
                       std::vector<std::string> feature_ids,
                       const RowMatrix<double>& counts);

// Per-sample relative abundance, features x samples; every used column sums
// to 1 within 1e-12.
RowMatrix<double> relative_abundance(const SampleTable& table);

// 0/1 presence, features x samples. Idempotent: presence of a presence
// table is itself.
RowMatrix<double> presence(const SampleTable& table);

}  // namespace stripefrac
