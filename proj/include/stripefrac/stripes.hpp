#pragma once

#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "stripefrac/common.hpp"

namespace stripefrac {

// floor(n/2) stripes cover all unordered sample pairs; needs n >= 2.
int total_stripes(int n_samples);

// Stripe s, slot k holds the (k, (k+s+1) mod n) pair. Odd n: every pair
// exactly once. Even n: the last stripe holds each of its pairs twice
// (slots k and k + n/2 coincide).
std::pair<int, int> stripe_pair(int n_samples, int stripe, int k);

/*
 * Accumulation target for stripes [start, stop): one row of n per stripe.
 * Ratio metrics carry a parallel totals buffer. Buffers start at zero and
 * `finalized` flips exactly once, when totals are divided through.
 */
template <class Real>
struct StripeSet {
  int n_samples = 0;
  int start = 0;
  int stop = 0;
  Metric metric = Metric::Unweighted;
  bool finalized = false;
  RowMatrix<Real> distances;  // (stop-start) x n_samples
  RowMatrix<Real> totals;     // same shape, or 0x0 when the metric has none

  int n_stripes() const { return stop - start; }
  bool has_totals() const { return metric_has_totals(metric); }
};

template <class Real>
StripeSet<Real> allocate_stripes(int n_samples, int start, int stop, Metric metric);

/* Square symmetric result with a zero diagonal. Values are held in double;
 * `precision` records which kernel produced them and picks the TSV digits. */
struct DistanceMatrix {
  std::vector<std::string> sample_ids;
  RowMatrix<double> values;
  Precision precision = Precision::Fp64;

  int n() const { return static_cast<int>(values.rows()); }
};

// Fold finalized stripe sets into the full matrix. The ranges must tile
// [0, total_stripes) exactly; gaps, overlaps or metadata mismatches are
// errors, as is any disagreement between an even-n duplicate slot pair
// (exact for fp64, 1e-6 relative for fp32). `sample_ids` may be empty, in
// which case decimal indices are used.
template <class Real>
DistanceMatrix condense(const std::vector<StripeSet<Real>>& parts,
                        std::vector<std::string> sample_ids = {});

// --- partial-result files ------------------------------------------------
//
// Little-endian layout: "STRF" magic, u8 version (1), u8 precision (4 or 8
// bytes per scalar), u8 metric code (1 unweighted, 2 weighted-unnormalized,
// 3 weighted-normalized), u8 reserved, u64 n_samples, u64 start, u64 stop;
// then distances row-major, totals row-major when the metric has them, and
// a trailing u64 FNV-1a checksum of the payload bytes.

template <class Real>
void write_stripe_file(const std::string& path, const StripeSet<Real>& set);

using AnyStripeSet = std::variant<StripeSet<float>, StripeSet<double>>;
AnyStripeSet read_stripe_file(const std::string& path);

// Read partials, check they share precision/metric/n, condense.
DistanceMatrix merge_stripe_files(const std::vector<std::string>& paths,
                                  std::vector<std::string> sample_ids = {});

// --- distance matrix TSV -------------------------------------------------
//
// Header row of sample ids, then one row per sample: id, then n values.
// fp64 prints 17 significant digits, fp32 9 — enough to round-trip.

std::string to_tsv(const DistanceMatrix& dm);
void write_tsv(const std::string& path, const DistanceMatrix& dm);
DistanceMatrix read_tsv_file(const std::string& path);

}  // namespace stripefrac
