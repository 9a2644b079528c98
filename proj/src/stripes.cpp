#include "stripefrac/stripes.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

static_assert(std::endian::native == std::endian::little,
              "stripe files are little-endian; big-endian hosts are unsupported");

namespace stripefrac {

int total_stripes(int n_samples) {
  if (n_samples < 2) throw Error("need at least 2 samples, got " +
                                 std::to_string(n_samples));
  return n_samples / 2;
}

std::pair<int, int> stripe_pair(int n_samples, int stripe, int k) {
  const int S = total_stripes(n_samples);
  if (stripe < 0 || stripe >= S) throw Error("stripe index out of range");
  if (k < 0 || k >= n_samples) throw Error("stripe slot out of range");
  return {k, (k + stripe + 1) % n_samples};
}

template <class Real>
StripeSet<Real> allocate_stripes(int n_samples, int start, int stop, Metric metric) {
  const int S = total_stripes(n_samples);
  if (start < 0 || stop > S || start >= stop)
    throw Error("stripe range " + std::to_string(start) + ":" + std::to_string(stop) +
                " does not fit in [0," + std::to_string(S) + ")");
  StripeSet<Real> set;
  set.n_samples = n_samples;
  set.start = start;
  set.stop = stop;
  set.metric = metric;
  set.distances = RowMatrix<Real>::Zero(stop - start, n_samples);
  if (set.has_totals()) set.totals = RowMatrix<Real>::Zero(stop - start, n_samples);
  return set;
}

template StripeSet<float> allocate_stripes<float>(int, int, int, Metric);
template StripeSet<double> allocate_stripes<double>(int, int, int, Metric);

namespace {

template <class Real>
bool duplicate_slots_agree(Real a, Real b) {
  if constexpr (std::is_same_v<Real, double>) {
    return a == b;  // same additions in the same order: bitwise equal
  } else {
    return std::abs(a - b) <= 1e-6f * std::max(std::abs(a), std::abs(b));
  }
}

std::vector<std::string> index_ids(int n) {
  std::vector<std::string> ids(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) ids[static_cast<std::size_t>(i)] = std::to_string(i);
  return ids;
}

}  // namespace

template <class Real>
DistanceMatrix condense(const std::vector<StripeSet<Real>>& parts,
                        std::vector<std::string> sample_ids) {
  if (parts.empty()) throw Error("condense: no stripe sets given");
  const int n = parts[0].n_samples;
  const Metric metric = parts[0].metric;
  const int S = total_stripes(n);
  for (const auto& p : parts) {
    if (p.n_samples != n) throw Error("condense: sample counts differ");
    if (p.metric != metric) throw Error("condense: metrics differ");
    if (!p.finalized) throw Error("condense: stripe set was not finalized");
  }

  std::vector<const StripeSet<Real>*> order;
  for (const auto& p : parts) order.push_back(&p);
  std::sort(order.begin(), order.end(),
            [](const auto* a, const auto* b) { return a->start < b->start; });
  int cursor = 0;
  for (const auto* p : order) {
    if (p->start > cursor)
      throw Error("condense: stripe ranges leave a gap at [" + std::to_string(cursor) +
                  "," + std::to_string(p->start) + ")");
    if (p->start < cursor)
      throw Error("condense: stripe ranges overlap at [" + std::to_string(p->start) +
                  "," + std::to_string(cursor) + ")");
    cursor = p->stop;
  }
  if (cursor != S)
    throw Error("condense: stripe ranges leave a gap at [" + std::to_string(cursor) +
                "," + std::to_string(S) + ")");

  if (!sample_ids.empty() &&
      static_cast<int>(sample_ids.size()) != n)
    throw Error("condense: sample id count does not match the matrix");

  DistanceMatrix dm;
  dm.sample_ids = sample_ids.empty() ? index_ids(n) : std::move(sample_ids);
  dm.precision = std::is_same_v<Real, float> ? Precision::Fp32 : Precision::Fp64;
  dm.values = RowMatrix<double>::Zero(n, n);

  const bool even = n % 2 == 0;
  for (const auto* p : order) {
    for (int s = p->start; s < p->stop; ++s) {
      const Real* row = p->distances.data() +
                        static_cast<std::size_t>(s - p->start) * static_cast<std::size_t>(n);
      for (int k = 0; k < n; ++k) {
        auto [a, b] = stripe_pair(n, s, k);
        if (even && s == S - 1 && k >= n / 2) {
          // second copy of a duplicated pair: verify, don't rewrite
          const Real prior = static_cast<Real>(dm.values(a, b));
          if (!duplicate_slots_agree(prior, row[k]))
            throw Error("condense: duplicated slot for samples (" + std::to_string(a) +
                        "," + std::to_string(b) + ") disagrees");
          continue;
        }
        dm.values(a, b) = static_cast<double>(row[k]);
        dm.values(b, a) = static_cast<double>(row[k]);
      }
    }
  }
  return dm;
}

template DistanceMatrix condense<float>(const std::vector<StripeSet<float>>&,
                                        std::vector<std::string>);
template DistanceMatrix condense<double>(const std::vector<StripeSet<double>>&,
                                         std::vector<std::string>);

namespace {

constexpr char kMagic[4] = {'S', 'T', 'R', 'F'};
constexpr std::uint8_t kFormatVersion = 1;

std::uint8_t metric_code(Metric m) {
  switch (m) {
    case Metric::Unweighted: return 1;
    case Metric::WeightedUnnormalized: return 2;
    case Metric::WeightedNormalized: return 3;
  }
  return 0;
}

Metric metric_from_code(std::uint8_t c, const std::string& path) {
  switch (c) {
    case 1: return Metric::Unweighted;
    case 2: return Metric::WeightedUnnormalized;
    case 3: return Metric::WeightedNormalized;
  }
  throw Error(path + ": unknown metric code " + std::to_string(c));
}

void put_u64(std::string& out, std::uint64_t v) {
  char bytes[8];
  std::memcpy(bytes, &v, 8);
  out.append(bytes, 8);
}

template <class Real>
void append_payload(std::string& out, const StripeSet<Real>& set) {
  const std::size_t dist_bytes =
      static_cast<std::size_t>(set.distances.size()) * sizeof(Real);
  out.append(reinterpret_cast<const char*>(set.distances.data()), dist_bytes);
  if (set.has_totals()) {
    const std::size_t tot_bytes =
        static_cast<std::size_t>(set.totals.size()) * sizeof(Real);
    out.append(reinterpret_cast<const char*>(set.totals.data()), tot_bytes);
  }
}

}  // namespace

template <class Real>
void write_stripe_file(const std::string& path, const StripeSet<Real>& set) {
  if (!set.finalized) throw Error("refusing to write an unfinalized stripe set");
  std::string blob;
  blob.append(kMagic, 4);
  blob.push_back(static_cast<char>(kFormatVersion));
  blob.push_back(static_cast<char>(sizeof(Real)));
  blob.push_back(static_cast<char>(metric_code(set.metric)));
  blob.push_back('\0');
  put_u64(blob, static_cast<std::uint64_t>(set.n_samples));
  put_u64(blob, static_cast<std::uint64_t>(set.start));
  put_u64(blob, static_cast<std::uint64_t>(set.stop));

  std::string payload;
  append_payload(payload, set);
  blob += payload;
  put_u64(blob, fnv1a64(payload.data(), payload.size()));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!out) throw Error("failed writing '" + path + "'");
}

template void write_stripe_file<float>(const std::string&, const StripeSet<float>&);
template void write_stripe_file<double>(const std::string&, const StripeSet<double>&);

namespace {

template <class Real>
StripeSet<Real> read_stripe_body(const std::string& path, Metric metric,
                                 std::uint64_t n, std::uint64_t start, std::uint64_t stop,
                                 const std::string& payload) {
  StripeSet<Real> set;
  set.n_samples = static_cast<int>(n);
  set.start = static_cast<int>(start);
  set.stop = static_cast<int>(stop);
  set.metric = metric;
  set.finalized = true;

  const std::size_t rows = static_cast<std::size_t>(stop - start);
  const std::size_t plane = rows * static_cast<std::size_t>(n) * sizeof(Real);
  const std::size_t want = metric_has_totals(metric) ? 2 * plane : plane;
  if (payload.size() != want)
    throw Error(path + ": payload is " + std::to_string(payload.size()) +
                " bytes, expected " + std::to_string(want));

  set.distances.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(n));
  std::memcpy(set.distances.data(), payload.data(), plane);
  if (metric_has_totals(metric)) {
    set.totals.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(n));
    std::memcpy(set.totals.data(), payload.data() + plane, plane);
  }
  return set;
}

}  // namespace

AnyStripeSet read_stripe_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string blob = ss.str();

  constexpr std::size_t kHeader = 4 + 1 + 1 + 1 + 1 + 8 + 8 + 8;
  if (blob.size() < kHeader + 8) throw Error(path + ": truncated stripe file");
  if (std::memcmp(blob.data(), kMagic, 4) != 0)
    throw Error(path + ": not a stripe file (bad magic)");
  const auto version = static_cast<std::uint8_t>(blob[4]);
  if (version != kFormatVersion)
    throw Error(path + ": unsupported version " + std::to_string(version));
  const auto scalar = static_cast<std::uint8_t>(blob[5]);
  if (scalar != 4 && scalar != 8)
    throw Error(path + ": unsupported precision byte " + std::to_string(scalar));
  const Metric metric = metric_from_code(static_cast<std::uint8_t>(blob[6]), path);

  std::uint64_t n = 0, start = 0, stop = 0;
  std::memcpy(&n, blob.data() + 8, 8);
  std::memcpy(&start, blob.data() + 16, 8);
  std::memcpy(&stop, blob.data() + 24, 8);
  if (n < 2) throw Error(path + ": sample count " + std::to_string(n) + " is invalid");
  if (stop <= start || stop > n / 2)
    throw Error(path + ": stripe range " + std::to_string(start) + ":" +
                std::to_string(stop) + " is invalid");

  const std::string payload = blob.substr(kHeader, blob.size() - kHeader - 8);
  std::uint64_t stored = 0;
  std::memcpy(&stored, blob.data() + blob.size() - 8, 8);
  if (fnv1a64(payload.data(), payload.size()) != stored)
    throw Error(path + ": checksum mismatch, file is corrupt");

  if (scalar == 4)
    return read_stripe_body<float>(path, metric, n, start, stop, payload);
  return read_stripe_body<double>(path, metric, n, start, stop, payload);
}

DistanceMatrix merge_stripe_files(const std::vector<std::string>& paths,
                                  std::vector<std::string> sample_ids) {
  if (paths.empty()) throw Error("merge: no input files");
  std::vector<AnyStripeSet> loaded;
  loaded.reserve(paths.size());
  for (const auto& p : paths) loaded.push_back(read_stripe_file(p));

  const bool fp32 = std::holds_alternative<StripeSet<float>>(loaded[0]);
  for (std::size_t i = 1; i < loaded.size(); ++i)
    if (std::holds_alternative<StripeSet<float>>(loaded[i]) != fp32)
      throw Error("merge: '" + paths[i] + "' has a different precision than '" +
                  paths[0] + "'");

  auto gather = [&]<class Real>() {
    std::vector<StripeSet<Real>> parts;
    parts.reserve(loaded.size());
    for (auto& any : loaded) parts.push_back(std::move(std::get<StripeSet<Real>>(any)));
    return condense(parts, std::move(sample_ids));
  };
  return fp32 ? gather.template operator()<float>()
              : gather.template operator()<double>();
}

namespace {

int tsv_digits(Precision p) { return p == Precision::Fp32 ? 9 : 17; }

void append_value(std::string& out, double v, int digits) {
  char buf[40];
  int len = std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
  out.append(buf, static_cast<std::size_t>(len));
}

}  // namespace

std::string to_tsv(const DistanceMatrix& dm) {
  const int n = dm.n();
  if (static_cast<int>(dm.sample_ids.size()) != n)
    throw Error("distance matrix has " + std::to_string(dm.sample_ids.size()) +
                " ids for " + std::to_string(n) + " samples");
  const int digits = tsv_digits(dm.precision);
  std::string out;
  for (int j = 0; j < n; ++j) {
    if (j) out.push_back('\t');
    out += dm.sample_ids[static_cast<std::size_t>(j)];
  }
  out.push_back('\n');
  for (int i = 0; i < n; ++i) {
    out += dm.sample_ids[static_cast<std::size_t>(i)];
    for (int j = 0; j < n; ++j) {
      out.push_back('\t');
      append_value(out, dm.values(i, j), digits);
    }
    out.push_back('\n');
  }
  return out;
}

void write_tsv(const std::string& path, const DistanceMatrix& dm) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  const std::string text = to_tsv(dm);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error("failed writing '" + path + "'");
}

DistanceMatrix read_tsv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::string line;
  auto next_line = [&](std::string& l) {
    if (!std::getline(in, l)) return false;
    if (!l.empty() && l.back() == '\r') l.pop_back();
    return true;
  };
  if (!next_line(line)) throw Error(path + ": empty matrix file");

  DistanceMatrix dm;
  {
    std::size_t begin = 0;
    for (;;) {
      std::size_t tab = line.find('\t', begin);
      dm.sample_ids.push_back(line.substr(begin, tab == std::string::npos
                                                     ? std::string::npos
                                                     : tab - begin));
      if (tab == std::string::npos) break;
      begin = tab + 1;
    }
  }
  const int n = static_cast<int>(dm.sample_ids.size());
  dm.values = RowMatrix<double>::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    if (!next_line(line))
      throw Error(path + ": expected " + std::to_string(n) + " matrix rows");
    std::size_t begin = 0, field = 0;
    int col = 0;
    for (;;) {
      std::size_t tab = line.find('\t', begin);
      std::string cell = line.substr(begin, tab == std::string::npos
                                                ? std::string::npos
                                                : tab - begin);
      if (field == 0) {
        if (cell != dm.sample_ids[static_cast<std::size_t>(i)])
          throw Error(path + ": row " + std::to_string(i + 1) + " id '" + cell +
                      "' does not match the header order");
      } else {
        if (col >= n) throw Error(path + ": row " + std::to_string(i + 1) + " is too wide");
        double v = 0.0;
        auto [end, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (ec != std::errc() || end != cell.data() + cell.size())
          throw Error(path + ": bad value '" + cell + "' in row " + std::to_string(i + 1));
        dm.values(i, col++) = v;
      }
      ++field;
      if (tab == std::string::npos) break;
      begin = tab + 1;
    }
    if (col != n)
      throw Error(path + ": row " + std::to_string(i + 1) + " has " + std::to_string(col) +
                  " values, expected " + std::to_string(n));
  }
  return dm;
}

}  // namespace stripefrac
