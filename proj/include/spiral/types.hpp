#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace spiral {

/// Thrown for every contract violation in the library (bad dimensions,
/// infeasible inputs, malformed files).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void append(std::ostringstream &) {}

template <typename T, typename... Rest>
void append(std::ostringstream &oss, T &&token, Rest &&...rest) {
  oss << std::forward<T>(token);
  append(oss, std::forward<Rest>(rest)...);
}

}  // namespace detail

template <typename... Args>
[[noreturn]] void fail(Args &&...args) {
  std::ostringstream oss;
  detail::append(oss, std::forward<Args>(args)...);
  throw Error(oss.str());
}

inline void require_same_size(std::size_t a, std::size_t b, const char *what) {
  if (a != b) fail(what, ": dimension mismatch (", a, " vs ", b, ")");
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  require_same_size(a.size(), b.size(), "dot");
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

inline double squared_norm(std::span<const double> a) { return dot(a, a); }

inline double norm2(std::span<const double> a) { return std::sqrt(squared_norm(a)); }

inline double norm1(std::span<const double> a) {
  double acc = 0.0;
  for (double v : a) acc += std::abs(v);
  return acc;
}

/// Real intensity vector. Signals that represent an estimate of the scene
/// carry `nonneg_required`; gradient-step targets (s^k) do not.
class Signal {
 public:
  Signal() = default;

  Signal(std::vector<double> values, bool nonneg_required)
      : values_(std::move(values)), nonneg_required_(nonneg_required) {
    if (values_.empty()) fail("Signal: length must be positive");
    for (std::size_t j = 0; j < values_.size(); ++j) {
      if (!std::isfinite(values_[j])) fail("Signal: non-finite entry at index ", j);
      if (nonneg_required_ && values_[j] < 0.0)
        fail("Signal: negative entry ", values_[j], " at index ", j);
    }
  }

  static Signal intensity(std::vector<double> values) {
    return Signal(std::move(values), true);
  }
  static Signal unconstrained(std::vector<double> values) {
    return Signal(std::move(values), false);
  }

  std::size_t size() const noexcept { return values_.size(); }
  bool nonneg_required() const noexcept { return nonneg_required_; }
  double operator[](std::size_t j) const { return values_[j]; }

  std::span<const double> values() const noexcept { return values_; }
  const std::vector<double> &vector() const noexcept { return values_; }
  std::vector<double> release() && { return std::move(values_); }

  friend bool operator==(const Signal &, const Signal &) = default;

 private:
  std::vector<double> values_;
  bool nonneg_required_ = false;
};

/// Observed photon counts y.
class CountVector {
 public:
  using value_type = std::uint64_t;

  CountVector() = default;
  explicit CountVector(std::vector<value_type> counts) : counts_(std::move(counts)) {}

  std::size_t size() const noexcept { return counts_.size(); }
  value_type operator[](std::size_t i) const { return counts_[i]; }
  std::span<const value_type> counts() const noexcept { return counts_; }

  std::vector<double> as_doubles() const {
    return std::vector<double>(counts_.begin(), counts_.end());
  }

  double mean() const {
    if (counts_.empty()) return 0.0;
    double acc = 0.0;
    for (auto c : counts_) acc += static_cast<double>(c);
    return acc / static_cast<double>(counts_.size());
  }

  friend bool operator==(const CountVector &, const CountVector &) = default;

 private:
  std::vector<value_type> counts_;
};

/// Penalized objective. `nll` is +inf when some positive count sees zero
/// intensity; `total` follows it.
struct ObjectiveValue {
  double nll = 0.0;
  double penalty = 0.0;
  double total = 0.0;

  static ObjectiveValue make(double nll, double penalty) {
    return {nll, penalty, std::isfinite(nll) ? nll + penalty : nll};
  }
  bool finite() const { return std::isfinite(total); }
};

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

/// Relative l2 error ||estimate - truth|| / ||truth||.
inline double relative_rms(std::span<const double> estimate, std::span<const double> truth) {
  require_same_size(estimate.size(), truth.size(), "relative_rms");
  double num = 0.0;
  for (std::size_t j = 0; j < truth.size(); ++j) {
    const double d = estimate[j] - truth[j];
    num += d * d;
  }
  const double den = squared_norm(truth);
  if (den == 0.0) fail("relative_rms: truth has zero norm");
  return std::sqrt(num / den);
}

}  // namespace spiral
