#pragma once

#include <vector>

#include "stripefrac/kernels.hpp"

namespace stripefrac {

struct BenchRun {
  Variant variant = Variant::Naive;
  double best_seconds = 0.0;    // min over repeats
  double median_seconds = 0.0;
  KernelCounters counters;      // identical across repeats
  double writes_per_entry = 0.0;
};

// Time the full stripe computation (embedding included — it is the same
// work for every variant) once per repeat per variant.
std::vector<BenchRun> bench_variants(const PhyloTree& tree, const SampleTable& table,
                                     const KernelConfig& base,
                                     const std::vector<Variant>& variants,
                                     int repeats, int threads);

std::string format_bench_table(const std::vector<BenchRun>& runs);

}  // namespace stripefrac
