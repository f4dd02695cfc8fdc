#pragma once

// Plain-text exchange formats.
//
//   sensing matrix: header "N m k seed", then one "row col value" line per
//                   nonzero (k = 0 when rows are not uniform)
//   signal:         one real per line
//   counts:         one nonnegative integer per line

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "spiral/sensing_matrix.hpp"
#include "spiral/trace.hpp"
#include "spiral/types.hpp"

namespace spiral {

inline void write_matrix(std::ostream &os, const SensingMatrix &A) {
  os << A.rows() << ' ' << A.cols() << ' ' << A.nonzeros_per_row() << ' ' << A.seed() << '\n';
  for (const auto &e : A.entries()) os << e.row << ' ' << e.col << ' ' << detail::format_real(e.value) << '\n';
}

inline SensingMatrix read_matrix(std::istream &is) {
  std::string row;
  std::size_t line = 0;
  while (std::getline(is, row)) {
    ++line;
    if (!row.empty() && row.find_first_not_of(" \t\r") != std::string::npos) break;
  }
  std::istringstream header(row);
  std::size_t n = 0, m = 0, k = 0;
  std::uint64_t seed = 0;
  if (!(header >> n >> m >> k >> seed)) fail("matrix file: bad header on line ", line, ": '", row, "'");
  std::vector<MatrixEntry> entries;
  while (std::getline(is, row)) {
    ++line;
    if (row.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(row);
    MatrixEntry e;
    std::string value;
    if (!(ls >> e.row >> e.col >> value)) fail("matrix file: bad entry on line ", line, ": '", row, "'");
    e.value = detail::parse_real(value, line, "matrix file");
    entries.push_back(e);
  }
  return SensingMatrix(n, m, std::move(entries), k, seed);
}

inline void write_values(std::ostream &os, std::span<const double> values) {
  for (double v : values) os << detail::format_real(v) << '\n';
}

inline void write_counts(std::ostream &os, const CountVector &y) {
  for (auto c : y.counts()) os << c << '\n';
}

inline std::vector<double> read_values(std::istream &is) {
  std::vector<double> out;
  std::string row;
  std::size_t line = 0;
  while (std::getline(is, row)) {
    ++line;
    const auto b = row.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = row.find_last_not_of(" \t\r");
    out.push_back(detail::parse_real(row.substr(b, e - b + 1), line, "value file"));
  }
  return out;
}

inline CountVector read_counts(std::istream &is) {
  std::vector<CountVector::value_type> out;
  std::string row;
  std::size_t line = 0;
  while (std::getline(is, row)) {
    ++line;
    const auto b = row.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = row.find_last_not_of(" \t\r");
    const std::string field = row.substr(b, e - b + 1);
    if (field.find_first_not_of("0123456789") != std::string::npos)
      fail("count file: '", field, "' on line ", line, " is not a nonnegative integer");
    out.push_back(std::stoull(field));
  }
  return CountVector(std::move(out));
}

namespace detail {

template <typename Fn>
auto with_input(const std::string &path, Fn &&fn) {
  std::ifstream in(path);
  if (!in) fail("cannot open '", path, "' for reading");
  return fn(in);
}

template <typename Fn>
void with_output(const std::string &path, Fn &&fn) {
  std::ofstream out(path);
  if (!out) fail("cannot open '", path, "' for writing");
  fn(out);
  if (!out) fail("write to '", path, "' failed");
}

}  // namespace detail

inline SensingMatrix load_matrix(const std::string &path) {
  return detail::with_input(path, [](std::istream &in) { return read_matrix(in); });
}
inline std::vector<double> load_values(const std::string &path) {
  return detail::with_input(path, [](std::istream &in) { return read_values(in); });
}
inline CountVector load_counts(const std::string &path) {
  return detail::with_input(path, [](std::istream &in) { return read_counts(in); });
}
inline void save_matrix(const std::string &path, const SensingMatrix &A) {
  detail::with_output(path, [&](std::ostream &out) { write_matrix(out, A); });
}
inline void save_values(const std::string &path, std::span<const double> v) {
  detail::with_output(path, [&](std::ostream &out) { write_values(out, v); });
}
inline void save_counts(const std::string &path, const CountVector &y) {
  detail::with_output(path, [&](std::ostream &out) { write_counts(out, y); });
}
inline void save_trace(const std::string &path, const SolveTrace &t) {
  detail::with_output(path, [&](std::ostream &out) { write_trace_csv(out, t); });
}

}  // namespace spiral
