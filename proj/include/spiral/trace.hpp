#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "spiral/types.hpp"

namespace spiral {

/// One row of a solver trace. `alpha` is NaN for solvers without a step size
/// and `rms` is NaN when no ground truth was supplied.
struct TraceRecord {
  std::size_t iter = 0;
  double objective = 0.0;
  double alpha = std::nan("");
  double rms = std::nan("");
  double seconds = 0.0;
};

struct SolveTrace {
  std::vector<TraceRecord> records;
  Signal estimate;
  bool stalled = false;
  std::string stop_reason;

  std::size_t iterations() const { return records.empty() ? 0 : records.back().iter; }
  double final_rms() const { return records.empty() ? std::nan("") : records.back().rms; }
};

inline constexpr const char *kTraceHeader = "iter,objective,alpha,rms,seconds";

namespace detail {

inline std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_real(const std::string &field, std::size_t line, const char *what) {
  if (field.empty()) fail(what, ": empty field on line ", line);
  char *end = nullptr;
  const double v = std::strtod(field.c_str(), &end);
  if (end != field.c_str() + field.size()) fail(what, ": malformed number '", field, "' on line ", line);
  return v;
}

inline std::vector<std::string> split_csv(const std::string &row) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : row) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace detail

inline void write_trace_csv(std::ostream &os, const SolveTrace &trace) {
  os << kTraceHeader << '\n';
  for (const auto &r : trace.records) {
    os << r.iter << ',' << detail::format_real(r.objective) << ',' << detail::format_real(r.alpha) << ','
       << detail::format_real(r.rms) << ',' << detail::format_real(r.seconds) << '\n';
  }
}

/// Parses a trace CSV; errors carry the 1-based line number.
inline std::vector<TraceRecord> read_trace_csv(std::istream &is) {
  std::string row;
  std::size_t line = 0;
  if (!std::getline(is, row)) fail("trace csv: empty input");
  ++line;
  if (!row.empty() && row.back() == '\r') row.pop_back();
  if (row != kTraceHeader) fail("trace csv: bad header on line 1: '", row, "'");
  std::vector<TraceRecord> out;
  while (std::getline(is, row)) {
    ++line;
    if (row.empty() || row == "\r") continue;
    const auto fields = detail::split_csv(row);
    if (fields.size() != 5) fail("trace csv: expected 5 fields on line ", line, ", got ", fields.size());
    TraceRecord r;
    const double iter = detail::parse_real(fields[0], line, "trace csv");
    if (!(iter >= 0.0) || iter != std::floor(iter)) fail("trace csv: bad iteration '", fields[0], "' on line ", line);
    r.iter = static_cast<std::size_t>(iter);
    r.objective = detail::parse_real(fields[1], line, "trace csv");
    r.alpha = detail::parse_real(fields[2], line, "trace csv");
    r.rms = detail::parse_real(fields[3], line, "trace csv");
    r.seconds = detail::parse_real(fields[4], line, "trace csv");
    out.push_back(r);
  }
  return out;
}

}  // namespace spiral
