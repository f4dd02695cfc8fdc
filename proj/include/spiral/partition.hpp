#pragma once

// Recursive dyadic partition (RDP) denoising with a complexity penalty:
//
//   P* = argmin_P 1/2 ||f(P) - s||^2 + tau |P|
//
// where f(P) is constant on each interval of P at level max(mean(s), 0),
// the nonnegative least-squares constant. The optimum is found bottom-up,
// each dyadic interval comparing "keep as one piece" with the best split
// of its two halves. Ties go to the merge.
//
// Interval statistics are accumulated pairwise (count, mean, centered sum of
// squares) so the fit error of a piece never suffers from cancellation.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "spiral/types.hpp"

namespace spiral {

struct Interval {
  std::size_t start = 0;
  std::size_t length = 0;
  double level = 0.0;

  friend bool operator==(const Interval &, const Interval &) = default;
};

struct PartitionFit {
  std::size_t m = 0;
  std::vector<Interval> intervals;  // sorted by start
  double cost = 0.0;

  std::size_t size() const noexcept { return intervals.size(); }

  /// True when the dyadic intervals tile [0, m) in order.
  bool valid() const {
    std::size_t next = 0;
    for (const auto &iv : intervals) {
      if (iv.start != next || !is_power_of_two(iv.length) || iv.start % iv.length != 0) return false;
      if (!(iv.level >= 0.0)) return false;
      next += iv.length;
    }
    return next == m && m > 0;
  }
};

namespace detail {

struct Moments {
  double count = 0.0;
  double mean = 0.0;
  double m2 = 0.0;  // sum of squared deviations from mean

  static Moments single(double x) { return {1.0, x, 0.0}; }

  static Moments combine(const Moments &a, const Moments &b) {
    const double n = a.count + b.count;
    const double delta = b.mean - a.mean;
    return {n, a.mean + delta * (b.count / n), a.m2 + b.m2 + delta * delta * (a.count * b.count / n)};
  }

  double level() const { return std::max(mean, 0.0); }

  /// 1/2 sum (x - level)^2 over the interval.
  double fit_cost() const { return 0.5 * (mean < 0.0 ? m2 + count * mean * mean : m2); }
};

inline std::size_t checked_log2(std::size_t m, const char *what) {
  if (!is_power_of_two(m)) fail(what, ": length ", m, " is not a power of two");
  std::size_t levels = 0;
  while ((std::size_t{1} << levels) < m) ++levels;
  return levels;
}

inline void check_tau(double tau, const char *what) {
  if (!(tau >= 0.0) || !std::isfinite(tau)) fail(what, ": tau must be finite and >= 0, got ", tau);
}

}  // namespace detail

/// Globally optimal RDP fit of `s` with penalty `tau` per interval.
inline PartitionFit rdp_denoise(std::span<const double> s, double tau) {
  const std::size_t m = s.size();
  detail::checked_log2(m, "rdp_denoise");
  detail::check_tau(tau, "rdp_denoise");

  // Heap layout: node 1 is the root, children of i are 2i and 2i+1, and the
  // samples sit at m..2m-1.
  std::vector<detail::Moments> stats(2 * m);
  std::vector<double> best(2 * m);
  std::vector<char> merged(2 * m, 1);
  for (std::size_t j = 0; j < m; ++j) {
    stats[m + j] = detail::Moments::single(s[j]);
    best[m + j] = stats[m + j].fit_cost() + tau;
  }
  for (std::size_t i = m - 1; i >= 1; --i) {
    stats[i] = detail::Moments::combine(stats[2 * i], stats[2 * i + 1]);
    const double keep = stats[i].fit_cost() + tau;
    const double split = best[2 * i] + best[2 * i + 1];
    merged[i] = keep <= split;
    best[i] = merged[i] ? keep : split;
  }

  PartitionFit fit;
  fit.m = m;
  fit.cost = best[1];
  struct Frame {
    std::size_t node, start, length;
  };
  std::vector<Frame> stack{{1, 0, m}};
  while (!stack.empty()) {
    const Frame fr = stack.back();
    stack.pop_back();
    if (merged[fr.node] || fr.length == 1) {
      fit.intervals.push_back({fr.start, fr.length, stats[fr.node].level()});
      continue;
    }
    const std::size_t half = fr.length / 2;
    stack.push_back({2 * fr.node + 1, fr.start + half, half});
    stack.push_back({2 * fr.node, fr.start, half});
  }
  return fit;
}

inline PartitionFit rdp_denoise(const Signal &s, double tau) { return rdp_denoise(s.values(), tau); }

/// Piecewise-constant signal f(P).
inline std::vector<double> fitted_signal(const PartitionFit &p) {
  std::vector<double> out(p.m, 0.0);
  for (const auto &iv : p.intervals) {
    if (iv.start + iv.length > p.m) fail("fitted_signal: interval [", iv.start, ",", iv.start + iv.length, ") exceeds m=", p.m);
    std::fill_n(out.begin() + static_cast<std::ptrdiff_t>(iv.start), iv.length, iv.level);
  }
  return out;
}

/// 1/2 ||f - s||^2 + tau * pieces, evaluated directly.
inline double partition_cost(std::span<const double> fitted, std::span<const double> s, double tau,
                             std::size_t pieces) {
  require_same_size(fitted.size(), s.size(), "partition_cost");
  double acc = 0.0;
  for (std::size_t j = 0; j < s.size(); ++j) {
    const double d = fitted[j] - s[j];
    acc += d * d;
  }
  return 0.5 * acc + tau * static_cast<double>(pieces);
}

/// One "start length level" line per interval.
inline void write_partition(std::ostream &os, const PartitionFit &p) {
  char buf[64];
  for (const auto &iv : p.intervals) {
    std::snprintf(buf, sizeof buf, "%.17g", iv.level);
    os << iv.start << ' ' << iv.length << ' ' << buf << '\n';
  }
}

namespace detail {

// Every dyadic interval of every circular shift: node (level l, start t)
// covers indices t, t+1, ..., t+2^l-1 (mod m). The tree of shift c is made of
// the nodes whose start is congruent to c modulo their length, and its
// children are (l-1, t) and (l-1, t + 2^(l-1)). Node statistics do not depend
// on the shift, so one pass over all m (log2 m + 1) nodes serves every shift.
struct CircularLattice {
  std::size_t m = 0;
  std::size_t levels = 0;
  std::vector<std::vector<Moments>> stats;
  std::vector<std::vector<double>> best;
  std::vector<std::vector<char>> merged;

  CircularLattice(std::span<const double> s, double tau) : m(s.size()), levels(checked_log2(s.size(), "rdp_denoise_ti")) {
    stats.resize(levels + 1);
    best.resize(levels + 1);
    merged.resize(levels + 1);
    stats[0].resize(m);
    best[0].resize(m);
    merged[0].assign(m, 1);
    for (std::size_t t = 0; t < m; ++t) {
      stats[0][t] = Moments::single(s[t]);
      best[0][t] = stats[0][t].fit_cost() + tau;
    }
    for (std::size_t l = 1; l <= levels; ++l) {
      const std::size_t half = std::size_t{1} << (l - 1);
      stats[l].resize(m);
      best[l].resize(m);
      merged[l].resize(m);
      for (std::size_t t = 0; t < m; ++t) {
        const std::size_t r = (t + half) % m;
        stats[l][t] = Moments::combine(stats[l - 1][t], stats[l - 1][r]);
        const double keep = stats[l][t].fit_cost() + tau;
        const double split = best[l - 1][t] + best[l - 1][r];
        merged[l][t] = keep <= split;
        best[l][t] = merged[l][t] ? keep : split;
      }
    }
  }

  /// Number of shifts whose optimal tree contains each node as a reached
  /// node (all ancestors split). Exact small integers stored as doubles.
  std::vector<std::vector<double>> reach_counts() const {
    std::vector<std::vector<double>> reach(levels + 1, std::vector<double>(m, 0.0));
    std::fill(reach[levels].begin(), reach[levels].end(), 1.0);
    for (std::size_t l = levels; l >= 1; --l) {
      const std::size_t half = std::size_t{1} << (l - 1);
      for (std::size_t t = 0; t < m; ++t) {
        if (reach[l][t] == 0.0 || merged[l][t]) continue;
        reach[l - 1][t] += reach[l][t];
        reach[l - 1][(t + half) % m] += reach[l][t];
      }
    }
    return reach;
  }
};

}  // namespace detail

/// Cycle-spun RDP estimate: the average over all m circular shifts c of the
/// optimal single-grid fit of s rotated by c, rotated back. Shift-equivariant
/// and nonnegative. Runs in O(m log m).
inline std::vector<double> rdp_denoise_ti(std::span<const double> s, double tau) {
  detail::check_tau(tau, "rdp_denoise_ti");
  const detail::CircularLattice lattice(s, tau);
  const std::size_t m = lattice.m;
  const auto reach = lattice.reach_counts();

  std::vector<long double> total(m, 0.0L);
  std::vector<long double> prefix(2 * m + 1);
  for (std::size_t l = 0; l <= lattice.levels; ++l) {
    const std::size_t len = std::size_t{1} << l;
    bool any = false;
    prefix[0] = 0.0L;
    for (std::size_t t = 0; t < 2 * m; ++t) {
      const std::size_t u = t % m;
      long double w = 0.0L;
      if (reach[l][u] != 0.0 && (lattice.merged[l][u] || l == 0)) {
        w = static_cast<long double>(reach[l][u]) * lattice.stats[l][u].level();
        any = true;
      }
      prefix[t + 1] = prefix[t] + w;
    }
    if (!any) continue;
    // Pieces covering j start at j-len+1 .. j (mod m).
    for (std::size_t j = 0; j < m; ++j) total[j] += prefix[j + m + 1] - prefix[j + m + 1 - len];
  }

  std::vector<double> out(m);
  for (std::size_t j = 0; j < m; ++j) out[j] = std::max(0.0, static_cast<double>(total[j] / static_cast<long double>(m)));
  return out;
}

inline Signal rdp_denoise_ti(const Signal &s, double tau) {
  return Signal::intensity(rdp_denoise_ti(s.values(), tau));
}

/// |P| of the coarsest RDP on which f is exactly piecewise constant.
inline std::size_t coarsest_rdp_size(std::span<const double> f) {
  const std::size_t m = f.size();
  detail::checked_log2(m, "coarsest_rdp_size");
  std::vector<char> flat(2 * m, 1);
  std::vector<double> value(2 * m);
  for (std::size_t j = 0; j < m; ++j) value[m + j] = f[j];
  for (std::size_t i = m - 1; i >= 1; --i) {
    flat[i] = flat[2 * i] && flat[2 * i + 1] && value[2 * i] == value[2 * i + 1];
    value[i] = value[2 * i];
  }
  std::size_t pieces = 0;
  std::vector<std::size_t> stack{1};
  while (!stack.empty()) {
    const std::size_t i = stack.back();
    stack.pop_back();
    if (i >= m || flat[i]) {
      ++pieces;
    } else {
      stack.push_back(2 * i);
      stack.push_back(2 * i + 1);
    }
  }
  return pieces;
}

/// coarsest_rdp_size averaged over all circular shifts of f.
inline double mean_coarsest_rdp_size_ti(std::span<const double> f) {
  const std::size_t m = f.size();
  const std::size_t levels = detail::checked_log2(m, "mean_coarsest_rdp_size_ti");
  std::vector<std::vector<char>> flat(levels + 1, std::vector<char>(m, 1));
  for (std::size_t l = 1; l <= levels; ++l) {
    const std::size_t half = std::size_t{1} << (l - 1);
    for (std::size_t t = 0; t < m; ++t) {
      const std::size_t r = (t + half) % m;
      flat[l][t] = flat[l - 1][t] && flat[l - 1][r] && f[t] == f[r];
    }
  }
  std::vector<double> reach(m, 1.0), next(m);
  double pieces = 0.0;
  for (std::size_t l = levels + 1; l-- > 0;) {
    std::fill(next.begin(), next.end(), 0.0);
    const std::size_t half = l > 0 ? std::size_t{1} << (l - 1) : 0;
    for (std::size_t t = 0; t < m; ++t) {
      if (reach[t] == 0.0) continue;
      if (l == 0 || flat[l][t]) {
        pieces += reach[t];
      } else {
        next[t] += reach[t];
        next[(t + half) % m] += reach[t];
      }
    }
    std::swap(reach, next);
  }
  return pieces / static_cast<double>(m);
}

}  // namespace spiral
