#include "stripefrac/common.hpp"

#include <cstdio>
#include <fstream>
#include <vector>

namespace stripefrac {

std::string_view name(Metric m) {
  switch (m) {
    case Metric::Unweighted: return "unweighted";
    case Metric::WeightedUnnormalized: return "weighted-unnormalized";
    case Metric::WeightedNormalized: return "weighted-normalized";
  }
  return "?";
}

std::string_view name(Variant v) {
  switch (v) {
    case Variant::Naive: return "naive";
    case Variant::Batched: return "batched";
    case Variant::Tiled: return "tiled";
  }
  return "?";
}

std::string_view name(Precision p) {
  return p == Precision::Fp32 ? "fp32" : "fp64";
}

Metric metric_from_name(std::string_view s) {
  if (s == "unweighted") return Metric::Unweighted;
  if (s == "weighted-unnormalized") return Metric::WeightedUnnormalized;
  if (s == "weighted-normalized") return Metric::WeightedNormalized;
  throw Error("unknown metric '" + std::string(s) + "'");
}

Variant variant_from_name(std::string_view s) {
  if (s == "naive") return Variant::Naive;
  if (s == "batched") return Variant::Batched;
  if (s == "tiled") return Variant::Tiled;
  throw Error("unknown variant '" + std::string(s) + "'");
}

Precision precision_from_name(std::string_view s) {
  if (s == "fp32") return Precision::Fp32;
  if (s == "fp64") return Precision::Fp64;
  throw Error("unknown precision '" + std::string(s) + "'");
}

std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::uint64_t h = 0xcbf29ce484222325ull;
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    h = fnv1a64(buf.data(), static_cast<std::size_t>(in.gcount()), h);
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace stripefrac
