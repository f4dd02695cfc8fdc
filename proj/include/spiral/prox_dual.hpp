#pragma once

// Nonnegative l1 subproblem in an orthonormal basis W:
//
//   min_theta 1/2 ||theta - s||^2 + w ||theta||_1   subject to  W theta >= 0
//
// solved through its Lagrange dual
//
//   min_{gamma, lambda} h = 1/2 ||s + gamma + W^T lambda||^2 - 1/2 ||s||^2
//   subject to  lambda >= 0,  -w <= gamma <= w
//
// by exact block-coordinate minimization (gamma, then lambda). The primal
// point theta = s + gamma + W^T lambda is feasible after every sweep since
// W theta = [W (s + gamma)]_+, and -h bounds the primal objective from below.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "spiral/transforms.hpp"
#include "spiral/types.hpp"

namespace spiral {

struct DualState {
  std::vector<double> gamma;
  std::vector<double> lambda;
  std::vector<double> theta;
  std::size_t sweep = 0;
  double dual_value = 0.0;
  double primal_value = 0.0;
};

struct ProxResult {
  std::vector<double> theta;
  Signal f;
  double primal_value = 0.0;
  double dual_value = 0.0;
  double gap = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// 1/2 ||theta - s||^2 + w ||theta||_1
inline double primal_objective(std::span<const double> theta, std::span<const double> s, double w) {
  require_same_size(theta.size(), s.size(), "primal_objective");
  double fit = 0.0;
  for (std::size_t j = 0; j < s.size(); ++j) {
    const double d = theta[j] - s[j];
    fit += d * d;
  }
  return 0.5 * fit + w * norm1(theta);
}

template <OrthonormalTransform Basis>
double dual_objective(std::span<const double> gamma, std::span<const double> lambda,
                      std::span<const double> s, const Basis &W) {
  require_same_size(gamma.size(), s.size(), "dual_objective");
  require_same_size(lambda.size(), s.size(), "dual_objective");
  const auto Wt_lambda = W.analyze(lambda);
  double a = 0.0;
  for (std::size_t j = 0; j < s.size(); ++j) {
    const double t = s[j] + gamma[j] + Wt_lambda[j];
    a += t * t;
  }
  return 0.5 * a - 0.5 * squared_norm(s);
}

/// Gap tolerance used when the caller does not pick one: 1e-8 (1 + ||s||^2).
inline double default_gap_tol(std::span<const double> s) { return 1e-8 * (1.0 + squared_norm(s)); }

struct NoSweepObserver {
  void operator()(const DualState &) const noexcept {}
};

/// Solves the subproblem for coefficient-domain target `s` (theta-space).
/// Starts from lambda = 0 and stops once primal + dual <= gap_tol or after
/// `max_iters` sweeps. Without convergence the best primal iterate is
/// returned together with the best lower bound seen. `observer` sees the
/// state after each sweep.
template <OrthonormalTransform Basis, typename Observer = NoSweepObserver>
ProxResult prox_ortho_dual(std::span<const double> s, double w, const Basis &W, std::size_t max_iters,
                           double gap_tol, Observer &&observer = {}) {
  const std::size_t m = s.size();
  require_same_size(m, W.size(), "prox_ortho_dual");
  if (!(w >= 0.0) || !std::isfinite(w)) fail("prox_ortho_dual: weight must be finite and >= 0, got ", w);
  if (max_iters < 1) fail("prox_ortho_dual: max_iters must be >= 1");
  if (!(gap_tol > 0.0) || !std::isfinite(gap_tol)) fail("prox_ortho_dual: gap_tol must be > 0, got ", gap_tol);

  const double half_s2 = 0.5 * squared_norm(s);
  DualState state;
  state.gamma.assign(m, 0.0);
  state.lambda.assign(m, 0.0);
  state.theta.assign(m, 0.0);
  std::vector<double> Wt_lambda(m, 0.0);
  std::vector<double> shifted(m);

  ProxResult result;
  double best_primal = std::numeric_limits<double>::infinity();
  double best_dual = std::numeric_limits<double>::infinity();
  std::vector<double> best_theta;

  for (std::size_t j = 1; j <= max_iters; ++j) {
    for (std::size_t i = 0; i < m; ++i) {
      state.gamma[i] = std::clamp(-s[i] - Wt_lambda[i], -w, w);
      shifted[i] = s[i] + state.gamma[i];
    }
    const auto W_shifted = W.synthesize(shifted);
    for (std::size_t i = 0; i < m; ++i) state.lambda[i] = std::max(-W_shifted[i], 0.0);
    Wt_lambda = W.analyze(state.lambda);

    double theta_sq = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      state.theta[i] = shifted[i] + Wt_lambda[i];
      theta_sq += state.theta[i] * state.theta[i];
    }
    state.sweep = j;
    state.dual_value = 0.5 * theta_sq - half_s2;
    state.primal_value = primal_objective(state.theta, s, w);
    observer(std::as_const(state));

    if (state.primal_value < best_primal) {
      best_primal = state.primal_value;
      best_theta = state.theta;
    }
    best_dual = std::min(best_dual, state.dual_value);
    result.iterations = j;
    if (best_primal + best_dual <= gap_tol) {
      result.converged = true;
      break;
    }
  }

  result.theta = std::move(best_theta);
  result.primal_value = best_primal;
  result.dual_value = best_dual;
  result.gap = best_primal + best_dual;

  auto f = W.synthesize(result.theta);
  double scale = 1.0;
  for (double v : f) scale = std::max(scale, std::abs(v));
  for (std::size_t i = 0; i < m; ++i) {
    if (f[i] < -1e-12 * scale) fail("prox_ortho_dual: synthesized value ", f[i], " at ", i, " violates W theta >= 0");
    f[i] = std::max(f[i], 0.0);
  }
  result.f = Signal::intensity(std::move(f));
  return result;
}

template <OrthonormalTransform Basis>
ProxResult prox_ortho_dual(const Signal &s, double w, const Basis &W, std::size_t max_iters, double gap_tol) {
  return prox_ortho_dual(s.values(), w, W, max_iters, gap_tol);
}

}  // namespace spiral
