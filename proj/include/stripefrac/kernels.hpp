#pragma once

#include <cstdint>
#include <thread>
#include <vector>

#include "stripefrac/common.hpp"
#include "stripefrac/embed.hpp"
#include "stripefrac/newick.hpp"
#include "stripefrac/stripes.hpp"
#include "stripefrac/table.hpp"

namespace stripefrac {

struct KernelConfig {
  Metric metric = Metric::Unweighted;
  Variant variant = Variant::Tiled;
  Precision precision = Precision::Fp64;
  int batch_capacity = 64;  // embedding rows per kernel pass
  int step_size = 0;        // sample tile width; 0 picks the precision default

  int resolved_step_size() const {
    if (step_size > 0) return step_size;
    return precision == Precision::Fp32 ? 32 : 16;
  }
};

/* Work accounting, exact by construction (derived from loop bounds, not
 * sampled). accumulator_writes counts commits to the distances buffer;
 * embedding_reads counts scalar loads from the embedding (each entry update
 * reads its two sample columns once, serving distances and totals alike);
 * kernel_passes counts batches handed to the kernel. */
struct KernelCounters {
  std::uint64_t accumulator_writes = 0;
  std::uint64_t embedding_reads = 0;
  std::uint64_t kernel_passes = 0;

  KernelCounters& operator+=(const KernelCounters& o) {
    accumulator_writes += o.accumulator_writes;
    embedding_reads += o.embedding_reads;
    kernel_passes += o.kernel_passes;
    return *this;
  }
};

namespace detail {

/*
 * One stripe entry, one embedding row. Every variant funnels through this
 * update so fp64 results are bitwise identical across variants, batch sizes,
 * step sizes and stripe partitions (same additions, same order; the baseline
 * x86-64 target fuses nothing). On 0/1 presence rows |u-v| is XOR and
 * max(u,v) is OR, so the unweighted metric shares the weighted shape.
 */
template <Metric M, class Real>
inline void update_entry(Real u, Real v, Real length, Real& d, Real& t) {
  Real diff = u - v;
  if (diff < Real(0)) diff = -diff;
  d += diff * length;
  if constexpr (M == Metric::Unweighted)
    t += (u > v ? u : v) * length;
  else if constexpr (M == Metric::WeightedNormalized)
    t += (u + v) * length;
  else
    (void)t;
}

// naive: commit to the stripe buffer after every embedding row — one
// read-modify-write of every entry per row e.
template <Metric M, class Real>
void run_naive(Real* dist, Real* tot, const Real* emb, const Real* lengths,
               int filled, int n, int padded, int s0, int s1, int set_start) {
  for (int e = 0; e < filled; ++e) {
    const Real* row = emb + static_cast<std::size_t>(e) * static_cast<std::size_t>(padded);
    const Real length = lengths[e];
    for (int s = s0; s < s1; ++s) {
      const std::size_t plane = static_cast<std::size_t>(s - set_start) *
                                static_cast<std::size_t>(n);
      Real* dm = dist + plane;
      Real* tt = tot ? tot + plane : nullptr;
      const int shift = s + 1;
      for (int k = 0; k < n; ++k) {
        int l1 = k + shift;
        if (l1 >= n) l1 -= n;  // wraparound
        Real d = dm[k];
        Real t = tt ? tt[k] : Real(0);
        update_entry<M>(row[k], row[l1], length, d, t);
        dm[k] = d;
        if (tt) tt[k] = t;
      }
    }
  }
}

// batched: keep the entry in a local accumulator across the whole batch and
// commit once — stripe-major, entry-minor walk.
template <Metric M, class Real>
void run_batched(Real* dist, Real* tot, const Real* emb, const Real* lengths,
                 int filled, int n, int padded, int s0, int s1, int set_start) {
  for (int s = s0; s < s1; ++s) {
    const std::size_t plane = static_cast<std::size_t>(s - set_start) *
                              static_cast<std::size_t>(n);
    Real* dm = dist + plane;
    Real* tt = tot ? tot + plane : nullptr;
    const int shift = s + 1;
    for (int k = 0; k < n; ++k) {
      int l1 = k + shift;
      if (l1 >= n) l1 -= n;
      Real d = dm[k];
      Real t = tt ? tt[k] : Real(0);
      for (int e = 0; e < filled; ++e) {
        const Real* row = emb + static_cast<std::size_t>(e) * static_cast<std::size_t>(padded);
        update_entry<M>(row[k], row[l1], lengths[e], d, t);
      }
      dm[k] = d;
      if (tt) tt[k] = t;
    }
  }
}

// tiled: sample tiles outermost, stripes in the middle, lanes within the
// tile innermost, so a tile's embedding columns stay cache-hot across every
// stripe and the lane loop vectorizes. Commit discipline matches batched:
// one write per entry per batch.
template <Metric M, class Real>
void run_tiled(Real* dist, Real* tot, const Real* emb, const Real* lengths,
               int filled, int n, int padded, int s0, int s1, int set_start,
               int step, Real* lane_d, Real* lane_t) {
  const int sample_steps = padded / step;
  for (int sk = 0; sk < sample_steps; ++sk) {
    const int k0 = sk * step;
    const int lanes = std::min(step, n - k0);
    if (lanes <= 0) continue;  // tile entirely in the padding tail
    for (int s = s0; s < s1; ++s) {
      const std::size_t plane = static_cast<std::size_t>(s - set_start) *
                                static_cast<std::size_t>(n);
      Real* dm = dist + plane + k0;
      Real* tt = tot ? tot + plane + k0 : nullptr;
      const int shift = s + 1;
      for (int i = 0; i < lanes; ++i) lane_d[i] = dm[i];
      if (tt)
        for (int i = 0; i < lanes; ++i) lane_t[i] = tt[i];

      if (k0 + shift + lanes <= n) {
        // the partner window is contiguous: lane loop vectorizes cleanly
        for (int e = 0; e < filled; ++e) {
          const Real* row = emb + static_cast<std::size_t>(e) * static_cast<std::size_t>(padded);
          const Real* u = row + k0;
          const Real* v = row + k0 + shift;
          const Real length = lengths[e];
          for (int i = 0; i < lanes; ++i)
            update_entry<M>(u[i], v[i], length, lane_d[i], lane_t[i]);
        }
      } else {
        // partner window wraps past sample n-1
        for (int e = 0; e < filled; ++e) {
          const Real* row = emb + static_cast<std::size_t>(e) * static_cast<std::size_t>(padded);
          const Real length = lengths[e];
          for (int i = 0; i < lanes; ++i) {
            int l1 = k0 + i + shift;
            if (l1 >= n) l1 -= n;
            update_entry<M>(row[k0 + i], row[l1], length, lane_d[i], lane_t[i]);
          }
        }
      }

      for (int i = 0; i < lanes; ++i) dm[i] = lane_d[i];
      if (tt)
        for (int i = 0; i < lanes; ++i) tt[i] = lane_t[i];
    }
  }
}

template <Metric M, class Real>
void accumulate_range(StripeSet<Real>& set, const EmbeddingBatch<Real>& batch,
                      const KernelConfig& cfg, KernelCounters& counters,
                      int s0, int s1) {
  Real* dist = set.distances.data();
  Real* tot = set.has_totals() ? set.totals.data() : nullptr;
  const Real* emb = batch.emb.data();
  const Real* lengths = batch.lengths.data();
  const int n = set.n_samples;
  const int padded = batch.n_samples_padded;

  switch (cfg.variant) {
    case Variant::Naive:
      run_naive<M>(dist, tot, emb, lengths, batch.filled, n, padded, s0, s1, set.start);
      break;
    case Variant::Batched:
      run_batched<M>(dist, tot, emb, lengths, batch.filled, n, padded, s0, s1, set.start);
      break;
    case Variant::Tiled: {
      const int step = cfg.resolved_step_size();
      std::vector<Real> lane_d(static_cast<std::size_t>(step));
      std::vector<Real> lane_t(static_cast<std::size_t>(step));
      run_tiled<M>(dist, tot, emb, lengths, batch.filled, n, padded, s0, s1,
                   set.start, step, lane_d.data(), lane_t.data());
      break;
    }
  }

  // Exact work accounting from the loop bounds.
  const std::uint64_t entries = static_cast<std::uint64_t>(s1 - s0) *
                                static_cast<std::uint64_t>(n);
  const std::uint64_t rows = static_cast<std::uint64_t>(batch.filled);
  counters.accumulator_writes += cfg.variant == Variant::Naive ? rows * entries : entries;
  counters.embedding_reads += 2 * rows * entries;
}

// Accumulate stripes [s0, s1) of `set` (absolute indices). Disjoint ranges
// of the same set may run on different threads concurrently.
template <class Real>
void accumulate_stripes(StripeSet<Real>& set, const EmbeddingBatch<Real>& batch,
                        const KernelConfig& cfg, KernelCounters& counters,
                        int s0, int s1) {
  switch (cfg.metric) {
    case Metric::Unweighted:
      accumulate_range<Metric::Unweighted>(set, batch, cfg, counters, s0, s1);
      break;
    case Metric::WeightedUnnormalized:
      accumulate_range<Metric::WeightedUnnormalized>(set, batch, cfg, counters, s0, s1);
      break;
    case Metric::WeightedNormalized:
      accumulate_range<Metric::WeightedNormalized>(set, batch, cfg, counters, s0, s1);
      break;
  }
}

}  // namespace detail

// Fold one embedding batch into the stripe set. Counts one kernel pass.
template <class Real>
void accumulate(StripeSet<Real>& set, const EmbeddingBatch<Real>& batch,
                const KernelConfig& cfg, KernelCounters& counters) {
  if (set.finalized) throw Error("cannot accumulate into a finalized stripe set");
  if (batch.filled < 1) throw Error("embedding batch is empty");
  if (batch.n_samples != set.n_samples)
    throw Error("batch and stripe set disagree on the sample count");
  if (batch.emb.rows() < batch.filled || batch.emb.cols() != batch.n_samples_padded)
    throw Error("embedding batch shape is inconsistent");
  if (cfg.metric != set.metric)
    throw Error("kernel metric does not match the stripe set");
  if (cfg.variant == Variant::Tiled &&
      batch.n_samples_padded % cfg.resolved_step_size() != 0)
    throw Error("batch padding is not a multiple of the step size");
  counters.kernel_passes += 1;
  detail::accumulate_stripes(set, batch, cfg, counters, set.start, set.stop);
}

// Divide distances by totals (0/0 -> 0) for ratio metrics; flips `finalized`.
template <class Real>
void finalize(StripeSet<Real>& set) {
  if (set.finalized) throw Error("stripe set was already finalized");
  if (set.has_totals()) {
    set.distances.array() = (set.totals.array() == Real(0))
                                .select(Real(0), set.distances.array() / set.totals.array());
  }
  set.finalized = true;
}

/*
 * End-to-end stripe computation: shear the tree to the table, stream
 * embedding batches, accumulate stripes [start, stop) (stop -1 means all),
 * finalize. With threads > 1 each batch is fanned out over disjoint stripe
 * sub-ranges; per-worker counters are summed, so totals match the
 * single-thread run exactly.
 */
template <class Real>
StripeSet<Real> compute_unifrac(const PhyloTree& tree, const SampleTable& table,
                                const KernelConfig& cfg, int start = 0, int stop = -1,
                                int threads = 1, KernelCounters* counters_out = nullptr) {
  constexpr Precision kPrec =
      std::is_same_v<Real, float> ? Precision::Fp32 : Precision::Fp64;
  if (cfg.precision != kPrec)
    throw Error("config asks for " + std::string(name(cfg.precision)) +
                " but compute_unifrac was instantiated for " + std::string(name(kPrec)));
  if (cfg.batch_capacity < 1) throw Error("batch capacity must be >= 1");
  if (cfg.resolved_step_size() < 1) throw Error("step size must be >= 1");

  const int S = total_stripes(table.n_samples());
  if (stop < 0) stop = S;

  const PhyloTree sheared = sheared_to_table(tree, table);
  Embedder embedder(sheared, table, embed_mode(cfg.metric), cfg.resolved_step_size());

  auto set = allocate_stripes<Real>(table.n_samples(), start, stop, cfg.metric);
  KernelCounters counters;

  const int workers = std::min(threads, set.n_stripes());
  while (auto batch64 = embedder.next_batch(cfg.batch_capacity)) {
    const EmbeddingBatch<Real> batch = cast_batch<Real>(*batch64);
    counters.kernel_passes += 1;
    if (workers <= 1) {
      detail::accumulate_stripes(set, batch, cfg, counters, set.start, set.stop);
      continue;
    }
    std::vector<KernelCounters> partial(static_cast<std::size_t>(workers));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    const int span = set.n_stripes();
    for (int w = 0; w < workers; ++w) {
      const int a = set.start + static_cast<int>(static_cast<std::int64_t>(span) * w / workers);
      const int b = set.start + static_cast<int>(static_cast<std::int64_t>(span) * (w + 1) / workers);
      pool.emplace_back([&, a, b, w] {
        detail::accumulate_stripes(set, batch, cfg, partial[static_cast<std::size_t>(w)],
                                   a, b);
      });
    }
    for (auto& t : pool) t.join();
    for (const auto& p : partial) counters += p;
  }

  finalize(set);
  if (counters_out) *counters_out += counters;
  return set;
}

// Full pipeline to a condensed matrix, with the table's sample ids.
template <class Real>
DistanceMatrix compute_distance_matrix(const PhyloTree& tree, const SampleTable& table,
                                       const KernelConfig& cfg, int threads = 1,
                                       KernelCounters* counters_out = nullptr) {
  std::vector<StripeSet<Real>> parts;
  parts.push_back(compute_unifrac<Real>(tree, table, cfg, 0, -1, threads, counters_out));
  return condense(parts, table.sample_ids);
}

}  // namespace stripefrac
