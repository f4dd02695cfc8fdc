#pragma once

// RMS-versus-time plots written as standalone SVG (plain text): one labeled
// polyline per trace, axes padded by 5% of the data range.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "spiral/trace.hpp"
#include "spiral/types.hpp"

namespace spiral {

struct PlotSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;  // (seconds, rms)
};

struct PlotLayout {
  double x_min = 0.0, x_max = 1.0;
  double y_min = 0.0, y_max = 1.0;
  std::vector<PlotSeries> series;
};

inline PlotSeries series_from_trace(std::string label, const std::vector<TraceRecord> &records) {
  PlotSeries s{std::move(label), {}};
  for (const auto &r : records)
    if (std::isfinite(r.rms) && std::isfinite(r.seconds)) s.points.emplace_back(r.seconds, r.rms);
  if (s.points.empty()) fail("plot: trace '", s.label, "' has no finite rms values");
  return s;
}

namespace detail {

inline std::string xml_escape(const std::string &text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::pair<double, double> padded_range(double lo, double hi) {
  double pad = 0.05 * (hi - lo);
  if (pad == 0.0) pad = 0.05 * std::max(std::abs(lo), 1.0);
  return {lo - pad, hi + pad};
}

}  // namespace detail

inline PlotLayout layout_plot(std::vector<PlotSeries> series) {
  if (series.empty()) fail("plot: need at least one series");
  double x0 = kInfinity, x1 = -kInfinity, y0 = kInfinity, y1 = -kInfinity;
  for (const auto &s : series)
    for (const auto &[x, y] : s.points) {
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  PlotLayout layout;
  std::tie(layout.x_min, layout.x_max) = detail::padded_range(x0, x1);
  std::tie(layout.y_min, layout.y_max) = detail::padded_range(y0, y1);
  layout.series = std::move(series);
  return layout;
}

inline std::string render_svg(const PlotLayout &layout) {
  constexpr double width = 720, height = 440;
  constexpr double left = 70, right = 170, top = 20, bottom = 50;
  constexpr const char *palette[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666"};
  const double pw = width - left - right, ph = height - top - bottom;
  const auto px = [&](double x) { return left + (x - layout.x_min) / (layout.x_max - layout.x_min) * pw; };
  const auto py = [&](double y) { return top + (layout.y_max - y) / (layout.y_max - layout.y_min) * ph; };
  const auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return std::string(buf);
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
  svg << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double xv = layout.x_min + (layout.x_max - layout.x_min) * t / 4.0;
    const double yv = layout.y_min + (layout.y_max - layout.y_min) * t / 4.0;
    svg << "<text x=\"" << num(px(xv)) << "\" y=\"" << num(top + ph + 16) << "\" font-size=\"11\" text-anchor=\"middle\">"
        << num(xv) << "</text>\n";
    svg << "<text x=\"" << num(left - 6) << "\" y=\"" << num(py(yv) + 4) << "\" font-size=\"11\" text-anchor=\"end\">"
        << num(yv) << "</text>\n";
  }
  svg << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << num(height - 10)
      << "\" font-size=\"12\" text-anchor=\"middle\">seconds</text>\n";
  svg << "<text x=\"14\" y=\"" << num(top + ph / 2) << "\" font-size=\"12\" transform=\"rotate(-90 14 "
      << num(top + ph / 2) << ")\" text-anchor=\"middle\">RMS</text>\n";
  for (std::size_t i = 0; i < layout.series.size(); ++i) {
    const auto &s = layout.series[i];
    const char *color = palette[i % std::size(palette)];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t p = 0; p < s.points.size(); ++p)
      svg << (p ? " " : "") << num(px(s.points[p].first)) << ',' << num(py(s.points[p].second));
    svg << "\"/>\n";
    svg << "<text x=\"" << num(left + pw + 10) << "\" y=\"" << num(top + 14 + 16.0 * static_cast<double>(i))
        << "\" font-size=\"12\" fill=\"" << color << "\">" << detail::xml_escape(s.label) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

/// Reads each trace CSV (label = file stem) and writes the SVG to `out_path`.
inline void emit_plot(const std::vector<std::string> &trace_paths, const std::string &out_path) {
  if (trace_paths.empty()) fail("emit_plot: need at least one trace file");
  std::vector<PlotSeries> series;
  for (const auto &path : trace_paths) {
    std::ifstream in(path);
    if (!in) fail("emit_plot: cannot open '", path, "'");
    std::vector<TraceRecord> records;
    try {
      records = read_trace_csv(in);
    } catch (const Error &e) {
      fail(path, ": ", e.what());
    }
    series.push_back(series_from_trace(std::filesystem::path(path).stem().string(), records));
  }
  std::ofstream out(out_path);
  if (!out) fail("emit_plot: cannot open '", out_path, "' for writing");
  out << render_svg(layout_plot(std::move(series)));
}

}  // namespace spiral
