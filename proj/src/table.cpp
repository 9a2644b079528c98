#include "stripefrac/table.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <unordered_map>

namespace stripefrac {

TableFormat table_format_from_name(std::string_view s) {
  if (s == "tsv-dense") return TableFormat::TsvDense;
  if (s == "tsv-sparse") return TableFormat::TsvSparse;
  throw Error("unknown table format '" + std::string(s) + "'");
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t begin = 0;
  for (;;) {
    std::size_t tab = line.find('\t', begin);
    if (tab == std::string::npos) {
      out.push_back(line.substr(begin));
      return out;
    }
    out.push_back(line.substr(begin, tab - begin));
    begin = tab + 1;
  }
}

double parse_count(const std::string& cell, std::size_t line_no) {
  double v = 0.0;
  auto [end, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || end != cell.data() + cell.size())
    throw Error("line " + std::to_string(line_no) + ": bad count '" + cell + "'");
  if (!std::isfinite(v))
    throw Error("line " + std::to_string(line_no) + ": count must be finite");
  if (v < 0.0)
    throw Error("line " + std::to_string(line_no) + ": count must be non-negative");
  return v;
}

// Strips a trailing '\r' so CRLF input parses like LF.
bool read_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

void check_sample_totals(SampleTable& t) {
  t.sample_totals.assign(t.sample_ids.size(), 0.0);
  for (const auto& feat : t.entries)
    for (const auto& [s, c] : feat) t.sample_totals[static_cast<std::size_t>(s)] += c;
  for (std::size_t s = 0; s < t.sample_ids.size(); ++s)
    if (!(t.sample_totals[s] > 0.0))
      throw Error("sample '" + t.sample_ids[s] + "' has no counts");
}

void check_unique(const std::vector<std::string>& ids, const char* what) {
  std::unordered_map<std::string, int> seen;
  for (const auto& id : ids) {
    if (id.empty()) throw Error(std::string(what) + " id is empty");
    if (++seen[id] > 1) throw Error("duplicate " + std::string(what) + " id '" + id + "'");
  }
}

SampleTable load_dense(std::istream& in) {
  SampleTable t;
  std::string line;
  std::size_t line_no = 0;
  if (!read_line(in, line)) throw Error("dense table is empty");
  ++line_no;
  auto header = split_tabs(line);
  if (header.empty() || header[0] != "#id")
    throw Error("dense table header must start with '#id'");
  if (header.size() < 2) throw Error("dense table header names no samples");
  t.sample_ids.assign(header.begin() + 1, header.end());
  check_unique(t.sample_ids, "sample");

  while (read_line(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto cells = split_tabs(line);
    if (cells.size() != header.size())
      throw Error("line " + std::to_string(line_no) + ": expected " +
                  std::to_string(header.size()) + " fields, got " +
                  std::to_string(cells.size()));
    t.feature_ids.push_back(cells[0]);
    auto& row = t.entries.emplace_back();
    for (std::size_t s = 0; s + 1 < cells.size(); ++s) {
      double v = parse_count(cells[s + 1], line_no);
      if (v > 0.0) row.emplace_back(static_cast<int>(s), v);
    }
  }
  check_unique(t.feature_ids, "feature");
  check_sample_totals(t);
  return t;
}

SampleTable load_sparse(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;

  std::vector<std::string> sample_order;
  std::unordered_map<std::string, int> sample_idx;
  bool pinned_samples = false;

  auto sample_index = [&](const std::string& id, std::size_t at) -> int {
    auto it = sample_idx.find(id);
    if (it != sample_idx.end()) return it->second;
    if (pinned_samples)
      throw Error("line " + std::to_string(at) + ": sample '" + id +
                  "' not in the #samples header");
    int idx = static_cast<int>(sample_order.size());
    sample_order.push_back(id);
    sample_idx.emplace(id, idx);
    return idx;
  };

  // Feature ids sort lexicographically, so the result is independent of
  // triplet order.
  std::map<std::string, std::map<int, double>> features;

  bool first = true;
  while (read_line(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto cells = split_tabs(line);
    if (first && cells[0] == "#samples") {
      first = false;
      if (cells.size() < 2) throw Error("#samples header names no samples");
      sample_order.assign(cells.begin() + 1, cells.end());
      check_unique(sample_order, "sample");
      for (std::size_t i = 0; i < sample_order.size(); ++i)
        sample_idx.emplace(sample_order[i], static_cast<int>(i));
      pinned_samples = true;
      continue;
    }
    first = false;
    if (cells.size() != 3)
      throw Error("line " + std::to_string(line_no) +
                  ": expected feature<TAB>sample<TAB>value");
    if (cells[0].empty())
      throw Error("line " + std::to_string(line_no) + ": feature id is empty");
    if (cells[1].empty())
      throw Error("line " + std::to_string(line_no) + ": sample id is empty");
    double v = parse_count(cells[2], line_no);
    int s = sample_index(cells[1], line_no);
    features[cells[0]][s] += v;  // duplicates of (feature, sample) sum
  }
  if (sample_order.empty()) throw Error("sparse table names no samples");

  SampleTable t;
  t.sample_ids = sample_order;
  for (auto& [fid, cells] : features) {
    t.feature_ids.push_back(fid);
    auto& row = t.entries.emplace_back();
    for (auto& [s, v] : cells)
      if (v > 0.0) row.emplace_back(s, v);  // std::map keeps samples ascending
  }
  check_sample_totals(t);
  return t;
}

}  // namespace

SampleTable load_table(std::istream& in, TableFormat format) {
  return format == TableFormat::TsvDense ? load_dense(in) : load_sparse(in);
}

SampleTable load_table_file(const std::string& path, TableFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open table file '" + path + "'");
  try {
    return load_table(in, format);
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
}

SampleTable make_table(std::vector<std::string> sample_ids,
                       std::vector<std::string> feature_ids,
                       const RowMatrix<double>& counts) {
  if (counts.rows() != static_cast<Eigen::Index>(feature_ids.size()) ||
      counts.cols() != static_cast<Eigen::Index>(sample_ids.size()))
    throw Error("make_table: counts shape does not match ids");
  SampleTable t;
  t.sample_ids = std::move(sample_ids);
  t.feature_ids = std::move(feature_ids);
  check_unique(t.sample_ids, "sample");
  check_unique(t.feature_ids, "feature");
  t.entries.resize(t.feature_ids.size());
  for (Eigen::Index f = 0; f < counts.rows(); ++f)
    for (Eigen::Index s = 0; s < counts.cols(); ++s) {
      double v = counts(f, s);
      if (!std::isfinite(v) || v < 0.0) throw Error("make_table: bad count");
      if (v > 0.0) t.entries[static_cast<std::size_t>(f)].emplace_back(static_cast<int>(s), v);
    }
  check_sample_totals(t);
  return t;
}

RowMatrix<double> relative_abundance(const SampleTable& table) {
  RowMatrix<double> m = RowMatrix<double>::Zero(table.n_features(), table.n_samples());
  for (int f = 0; f < table.n_features(); ++f)
    for (const auto& [s, c] : table.entries[static_cast<std::size_t>(f)])
      m(f, s) = c / table.sample_totals[static_cast<std::size_t>(s)];
  return m;
}

RowMatrix<double> presence(const SampleTable& table) {
  RowMatrix<double> m = RowMatrix<double>::Zero(table.n_features(), table.n_samples());
  for (int f = 0; f < table.n_features(); ++f)
    for (const auto& [s, c] : table.entries[static_cast<std::size_t>(f)])
      m(f, s) = c > 0.0 ? 1.0 : 0.0;
  return m;
}

}  // namespace stripefrac
