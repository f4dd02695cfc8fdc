#pragma once

// Poisson observation model y ~ Poisson(A f): likelihood, gradient,
// simulation and the one-step EM initializer.
//
// Conventions: 0 * log 0 = 0 and 0 / 0 = 0, so zero-count bins with zero
// intensity contribute nothing.

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "spiral/random.hpp"
#include "spiral/sensing_matrix.hpp"
#include "spiral/types.hpp"

namespace spiral {

namespace detail {

inline void check_model_dims(std::span<const double> f, const SensingMatrix &A,
                             const CountVector &y, const char *what) {
  require_same_size(f.size(), A.cols(), what);
  require_same_size(y.size(), A.rows(), what);
}

inline void check_nonnegative(std::span<const double> f, const char *what) {
  for (std::size_t j = 0; j < f.size(); ++j)
    if (!(f[j] >= 0.0)) fail(what, ": negative or NaN intensity ", f[j], " at index ", j);
}

}  // namespace detail

/// sum_i (Af)_i - y_i log (Af)_i, given the precomputed projection Af.
/// Returns +inf if a positive count meets zero intensity.
inline double poisson_nll_from_projection(std::span<const double> Af, const CountVector &y) {
  require_same_size(Af.size(), y.size(), "poisson_nll");
  double acc = 0.0;
  for (std::size_t i = 0; i < Af.size(); ++i) {
    const double mu = Af[i];
    const double yi = static_cast<double>(y[i]);
    if (yi == 0.0) {
      acc += mu;
    } else {
      if (mu <= 0.0) return kInfinity;
      acc += mu - yi * std::log(mu);
    }
  }
  return acc;
}

inline double poisson_nll(std::span<const double> f, const SensingMatrix &A, const CountVector &y) {
  detail::check_model_dims(f, A, y, "poisson_nll");
  detail::check_nonnegative(f, "poisson_nll");
  return poisson_nll_from_projection(A.apply(f), y);
}

inline double poisson_nll(const Signal &f, const SensingMatrix &A, const CountVector &y) {
  return poisson_nll(f.values(), A, y);
}

/// A^T (1 - y / Af). Throws if some y_i > 0 sees (Af)_i = 0: there is no
/// descent direction at such a point.
inline std::vector<double> poisson_nll_gradient(std::span<const double> f, const SensingMatrix &A,
                                                const CountVector &y) {
  detail::check_model_dims(f, A, y, "poisson_nll_gradient");
  const auto Af = A.apply(f);
  std::vector<double> residual(Af.size());
  for (std::size_t i = 0; i < Af.size(); ++i) {
    const double yi = static_cast<double>(y[i]);
    if (yi == 0.0) {
      residual[i] = 1.0;
    } else {
      if (Af[i] <= 0.0)
        fail("poisson_nll_gradient: zero intensity against count ", y[i], " at row ", i);
      residual[i] = 1.0 - yi / Af[i];
    }
  }
  return A.apply_transpose(residual);
}

inline Signal poisson_nll_gradient(const Signal &f, const SensingMatrix &A, const CountVector &y) {
  return Signal::unconstrained(poisson_nll_gradient(f.values(), A, y));
}

/// Independent Poisson draw per entry; deterministic for a fixed seed.
inline CountVector sample_counts(std::span<const double> intensity, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "poisson-counts"));
  std::vector<CountVector::value_type> counts(intensity.size());
  for (std::size_t i = 0; i < intensity.size(); ++i) {
    const double mu = intensity[i];
    if (!(mu >= 0.0) || !std::isfinite(mu)) fail("sample_counts: invalid intensity ", mu, " at index ", i);
    counts[i] = rng.poisson(mu);
  }
  return CountVector(std::move(counts));
}

inline CountVector sample_counts(const Signal &intensity, std::uint64_t seed) {
  return sample_counts(intensity.values(), seed);
}

/// Single E-step from the backprojection: with z = A^T y and x = y / Az,
/// f0 = z * (A^T x) / (A^T 1).
inline Signal em_init(const SensingMatrix &A, const CountVector &y) {
  require_same_size(y.size(), A.rows(), "em_init");
  const auto col_sums = A.column_sums();
  for (std::size_t j = 0; j < col_sums.size(); ++j)
    if (col_sums[j] <= 0.0) fail("em_init: column ", j, " of the sensing matrix is zero");
  const auto y_real = y.as_doubles();
  const auto z = A.apply_transpose(y_real);
  const auto Az = A.apply(z);
  std::vector<double> x(y.size(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (y_real[i] == 0.0) continue;
    if (Az[i] <= 0.0) fail("em_init: zero projection against count ", y[i], " at row ", i);
    x[i] = y_real[i] / Az[i];
  }
  const auto Atx = A.apply_transpose(x);
  std::vector<double> f0(z.size());
  for (std::size_t j = 0; j < f0.size(); ++j) f0[j] = z[j] * Atx[j] / col_sums[j];
  return Signal::intensity(std::move(f0));
}

}  // namespace spiral
