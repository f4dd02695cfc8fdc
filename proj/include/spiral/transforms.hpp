#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <span>
#include <string>
#include <vector>

#include "spiral/types.hpp"

namespace spiral {

/// Any orthonormal W usable by the dual subproblem solver. `analyze` computes
/// theta = W^T f, `synthesize` computes f = W theta, and the pair must satisfy
/// W^T W = W W^T = I.
template <typename T>
concept OrthonormalTransform = requires(const T &t, std::span<const double> v) {
  { t.size() } -> std::convertible_to<std::size_t>;
  { t.analyze(v) } -> std::same_as<std::vector<double>>;
  { t.synthesize(v) } -> std::same_as<std::vector<double>>;
};

/// Full-depth orthonormal Haar transform on a power-of-two length.
///
/// Coefficient layout: index 0 holds the scaling coefficient, followed by
/// detail coefficients from coarse to fine. Level l (l = 0 coarsest) owns
/// indices [2^l, 2^(l+1)); coefficient 2^l + p is supported on
/// [p m / 2^l, (p + 1) m / 2^l).
class HaarTransform {
 public:
  explicit HaarTransform(std::size_t length) : length_(length) {
    if (!is_power_of_two(length)) fail("HaarTransform: length ", length, " is not a power of two");
  }

  std::size_t size() const noexcept { return length_; }

  std::vector<double> analyze(std::span<const double> f) const {
    require_same_size(f.size(), length_, "HaarTransform::analyze");
    std::vector<double> data(f.begin(), f.end());
    std::vector<double> scratch(length_);
    for (std::size_t n = length_; n > 1; n /= 2) {
      const std::size_t half = n / 2;
      for (std::size_t p = 0; p < half; ++p) {
        const double a = data[2 * p];
        const double b = data[2 * p + 1];
        scratch[p] = (a + b) * kInvSqrt2;
        scratch[half + p] = (a - b) * kInvSqrt2;
      }
      std::copy(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(n), data.begin());
    }
    return data;
  }

  std::vector<double> synthesize(std::span<const double> theta) const {
    require_same_size(theta.size(), length_, "HaarTransform::synthesize");
    std::vector<double> data(theta.begin(), theta.end());
    std::vector<double> scratch(length_);
    for (std::size_t n = 2; n <= length_; n *= 2) {
      const std::size_t half = n / 2;
      for (std::size_t p = 0; p < half; ++p) {
        const double a = data[p];
        const double d = data[half + p];
        scratch[2 * p] = (a + d) * kInvSqrt2;
        scratch[2 * p + 1] = (a - d) * kInvSqrt2;
      }
      std::copy(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(n), data.begin());
    }
    return data;
  }

  struct Support {
    std::size_t start;
    std::size_t length;
  };

  /// Support of detail coefficient `index` (index >= 1).
  Support detail_support(std::size_t index) const {
    if (index == 0 || index >= length_) fail("HaarTransform::detail_support: bad index ", index);
    std::size_t level_size = 1;
    while (level_size * 2 <= index) level_size *= 2;
    const std::size_t width = length_ / level_size;
    return {(index - level_size) * width, width};
  }

 private:
  static constexpr double kInvSqrt2 = 0.70710678118654752440;
  std::size_t length_;
};

/// The runtime-selectable basis used by the solvers: identity or Haar.
class OrthoBasis {
 public:
  enum class Kind { identity, haar };

  OrthoBasis(Kind kind, std::size_t length) : kind_(kind), length_(length) {
    if (length == 0) fail("OrthoBasis: length must be positive");
    if (kind == Kind::haar && !is_power_of_two(length))
      fail("OrthoBasis: Haar basis needs a power-of-two length, got ", length);
  }

  static OrthoBasis identity(std::size_t length) { return {Kind::identity, length}; }
  static OrthoBasis haar(std::size_t length) { return {Kind::haar, length}; }

  Kind kind() const noexcept { return kind_; }
  std::size_t size() const noexcept { return length_; }

  std::vector<double> analyze(std::span<const double> f) const {
    if (kind_ == Kind::haar) return HaarTransform(length_).analyze(f);
    require_same_size(f.size(), length_, "OrthoBasis::analyze");
    return {f.begin(), f.end()};
  }

  std::vector<double> synthesize(std::span<const double> theta) const {
    if (kind_ == Kind::haar) return HaarTransform(length_).synthesize(theta);
    require_same_size(theta.size(), length_, "OrthoBasis::synthesize");
    return {theta.begin(), theta.end()};
  }

  Signal analyze(const Signal &f) const { return Signal::unconstrained(analyze(f.values())); }
  Signal synthesize(const Signal &theta) const {
    return Signal::unconstrained(synthesize(theta.values()));
  }

  std::string name() const { return kind_ == Kind::haar ? "haar" : "identity"; }

 private:
  Kind kind_;
  std::size_t length_;
};

static_assert(OrthonormalTransform<HaarTransform>);
static_assert(OrthonormalTransform<OrthoBasis>);

}  // namespace spiral
