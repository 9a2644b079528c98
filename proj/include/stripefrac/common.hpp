#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace stripefrac {

/* All recoverable failures surface as stripefrac::Error (or a subclass). */
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

enum class Metric { Unweighted, WeightedUnnormalized, WeightedNormalized };
enum class Variant { Naive, Batched, Tiled };
enum class Precision { Fp32, Fp64 };

std::string_view name(Metric m);
std::string_view name(Variant v);
std::string_view name(Precision p);
Metric metric_from_name(std::string_view s);
Variant variant_from_name(std::string_view s);
Precision precision_from_name(std::string_view s);

// Ratio metrics carry a parallel totals buffer; plain weighted sums do not.
inline bool metric_has_totals(Metric m) { return m != Metric::WeightedUnnormalized; }

inline std::size_t scalar_width(Precision p) { return p == Precision::Fp32 ? 4 : 8; }

// Dense row-major storage: one row per embedding row / per stripe.
template <class Real>
using RowMatrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class Real>
using Vector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

// FNV-1a 64-bit over raw bytes; chainable via the h argument.
std::uint64_t fnv1a64(const void* data, std::size_t len,
                      std::uint64_t h = 0xcbf29ce484222325ull);
std::uint64_t fnv1a64_file(const std::string& path);
std::string hex64(std::uint64_t v);

inline int round_up(int value, int multiple) {
  return ((value + multiple - 1) / multiple) * multiple;
}

}  // namespace stripefrac
