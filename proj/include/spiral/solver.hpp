#pragma once

// SPIRAL outer loop. Each iteration linearizes the Poisson log-likelihood
// around f^k with a spectral (Barzilai-Borwein) curvature alpha_k,
//
//   s^k     = f^k - grad F(f^k) / alpha_k
//   f^{k+1} = argmin_{f >= 0} 1/2 ||f - s^k||^2 + pen(f) / alpha_k,
//
// and hands the surrogate to the penalty's own nonnegative solver.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spiral/partition.hpp"
#include "spiral/poisson_model.hpp"
#include "spiral/prox_dual.hpp"
#include "spiral/prox_l1.hpp"
#include "spiral/sensing_matrix.hpp"
#include "spiral/trace.hpp"
#include "spiral/transforms.hpp"
#include "spiral/types.hpp"

namespace spiral {

enum class PenaltyKind { canonical_l1, ortho_l1, partition, partition_ti };

inline std::string to_string(PenaltyKind p) {
  switch (p) {
    case PenaltyKind::canonical_l1: return "canonical_l1";
    case PenaltyKind::ortho_l1: return "ortho_l1";
    case PenaltyKind::partition: return "partition";
    case PenaltyKind::partition_ti: return "partition_ti";
  }
  return "?";
}

struct DualSettings {
  std::size_t sweep_cap = 100;
  double gap_tol = 0.0;  // <= 0 selects default_gap_tol(s)
};

struct SolverConfig {
  PenaltyKind penalty = PenaltyKind::canonical_l1;
  OrthoBasis::Kind basis = OrthoBasis::Kind::haar;  // used by ortho_l1
  double tau = 1.0;  // 0 switches the penalty off
  double alpha_min = 1e-8;
  double alpha_max = 1e8;
  double alpha0 = 1.0;
  std::size_t max_iters = 1000;
  double time_budget = std::numeric_limits<double>::infinity();  // seconds
  double rel_change_tol = 1e-8;
  DualSettings inner;
  bool monotone = false;
  // Experimental: run non-monotone and switch to monotone acceptance from
  // this iteration on.
  std::optional<std::size_t> monotone_after;

  void validate() const {
    if (!(tau >= 0.0) || !std::isfinite(tau)) fail("SolverConfig: tau must be finite and >= 0, got ", tau);
    if (!(alpha_min > 0.0) || !(alpha_min <= alpha_max) || !std::isfinite(alpha_max))
      fail("SolverConfig: need 0 < alpha_min <= alpha_max < inf");
    if (!(alpha0 > 0.0) || !std::isfinite(alpha0)) fail("SolverConfig: alpha0 must be > 0");
    if (!(time_budget > 0.0)) fail("SolverConfig: time budget must be > 0");
    if (!(rel_change_tol >= 0.0)) fail("SolverConfig: rel_change_tol must be >= 0");
    if (inner.sweep_cap < 1) fail("SolverConfig: inner sweep cap must be >= 1");
  }

  bool monotone_at(std::size_t iteration) const {
    return monotone || (monotone_after && iteration >= *monotone_after);
  }
};

/// Spectral step: clip((df . dg) / (df . df), alpha_min, alpha_max), alpha_max
/// on non-positive or non-finite curvature, `fallback` when df = 0.
inline double bb_step(std::span<const double> df, std::span<const double> dg, double alpha_min,
                      double alpha_max, double fallback) {
  const double dd = squared_norm(df);
  if (dd == 0.0) return fallback;
  const double ratio = dot(df, dg) / dd;
  if (!(ratio > 0.0) || !std::isfinite(ratio)) return alpha_max;
  return std::clamp(ratio, alpha_min, alpha_max);
}

/// pen(f) for the configured penalty. The partition penalties count pieces of
/// the coarsest dyadic partition on which f is constant (averaged over
/// circular shifts for the cycle-spun variant).
inline double penalty_value(const SolverConfig &cfg, std::span<const double> f) {
  switch (cfg.penalty) {
    case PenaltyKind::canonical_l1: return cfg.tau * norm1(f);
    case PenaltyKind::ortho_l1: return cfg.tau * norm1(OrthoBasis(cfg.basis, f.size()).analyze(f));
    case PenaltyKind::partition: return cfg.tau * static_cast<double>(coarsest_rdp_size(f));
    case PenaltyKind::partition_ti: return cfg.tau * mean_coarsest_rdp_size_ti(f);
  }
  return 0.0;
}

inline ObjectiveValue penalized_objective(std::span<const double> f, const SensingMatrix &A,
                                          const CountVector &y, const SolverConfig &cfg) {
  return ObjectiveValue::make(poisson_nll(f, A, y), penalty_value(cfg, f));
}

struct SubproblemInfo {
  std::size_t sweeps = 0;
  double gap = 0.0;
  bool converged = true;
};

/// argmin_{f >= 0} 1/2 ||f - s||^2 + (weight / tau) pen(f), i.e. the
/// surrogate with weight = tau / alpha_k.
inline std::vector<double> solve_subproblem(const SolverConfig &cfg, std::span<const double> s, double weight,
                                            SubproblemInfo *info = nullptr) {
  switch (cfg.penalty) {
    case PenaltyKind::canonical_l1: return prox_canonical(s, weight);
    case PenaltyKind::ortho_l1: {
      const OrthoBasis W(cfg.basis, s.size());
      const auto target = W.analyze(s);
      const double tol = cfg.inner.gap_tol > 0.0 ? cfg.inner.gap_tol : default_gap_tol(target);
      auto res = prox_ortho_dual(target, weight, W, cfg.inner.sweep_cap, tol);
      if (info) *info = {res.iterations, res.gap, res.converged};
      return std::move(res.f).release();
    }
    case PenaltyKind::partition: return fitted_signal(rdp_denoise(s, weight));
    case PenaltyKind::partition_ti: return rdp_denoise_ti(s, weight);
  }
  fail("solve_subproblem: unknown penalty");
}

struct SpiralState {
  std::vector<double> f;
  std::vector<double> grad;
  std::vector<double> prev_f;
  std::vector<double> prev_grad;
  double alpha = 1.0;
  ObjectiveValue objective;
  std::size_t iteration = 0;
  bool stalled = false;
  SubproblemInfo last_subproblem;
};

/// State at a feasible starting point. If the gradient is undefined at f0
/// because a positive count sees zero intensity, f0 is lifted by 1e-12 once.
inline SpiralState spiral_start(std::vector<double> f0, const SensingMatrix &A, const CountVector &y,
                                const SolverConfig &cfg) {
  cfg.validate();
  detail::check_model_dims(f0, A, y, "spiral_start");
  detail::check_nonnegative(f0, "spiral_start");
  SpiralState st;
  st.f = std::move(f0);
  if (!std::isfinite(poisson_nll(st.f, A, y))) {
    for (double &v : st.f) v += 1e-12;
    if (!std::isfinite(poisson_nll(st.f, A, y))) fail("spiral_start: infeasible start (infinite objective)");
  }
  st.grad = poisson_nll_gradient(st.f, A, y);
  st.objective = penalized_objective(st.f, A, y, cfg);
  st.alpha = std::clamp(cfg.alpha0, cfg.alpha_min, cfg.alpha_max);
  return st;
}

/// One SPIRAL iteration in place. Candidates with an infinite objective (and,
/// in monotone mode, candidates that raise the objective) are retried with a
/// doubled alpha; if alpha_max still fails, the iterate is kept and the state
/// flagged as stalled.
inline void spiral_iterate(SpiralState &st, const SensingMatrix &A, const CountVector &y, const SolverConfig &cfg) {
  const std::size_t m = st.f.size();
  if (st.iteration > 0) {
    std::vector<double> df(m), dg(m);
    for (std::size_t j = 0; j < m; ++j) {
      df[j] = st.f[j] - st.prev_f[j];
      dg[j] = st.grad[j] - st.prev_grad[j];
    }
    st.alpha = bb_step(df, dg, cfg.alpha_min, cfg.alpha_max, st.alpha);
  }
  const bool monotone = cfg.monotone_at(st.iteration);

  std::vector<double> s(m);
  for (;;) {
    for (std::size_t j = 0; j < m; ++j) s[j] = st.f[j] - st.grad[j] / st.alpha;
    SubproblemInfo info;
    auto candidate = solve_subproblem(cfg, s, cfg.tau / st.alpha, &info);
    const auto obj = penalized_objective(candidate, A, y, cfg);
    const bool accept = obj.finite() && (!monotone || obj.total <= st.objective.total);
    if (accept) {
      st.prev_f = std::move(st.f);
      st.prev_grad = std::move(st.grad);
      st.f = std::move(candidate);
      st.grad = poisson_nll_gradient(st.f, A, y);
      st.objective = obj;
      st.last_subproblem = info;
      break;
    }
    if (st.alpha >= cfg.alpha_max) {
      st.stalled = true;
      break;
    }
    st.alpha = std::min(2.0 * st.alpha, cfg.alpha_max);
  }
  ++st.iteration;
}

/// Called with (iteration, iterate) for the starting point and every accepted
/// iterate.
using IterateObserver = std::function<void(std::size_t, std::span<const double>)>;

namespace detail {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}

  /// Seconds since construction, forced strictly past the previous reading.
  double lap() {
    double t = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    if (t <= last_) t = std::nextafter(last_, std::numeric_limits<double>::infinity());
    last_ = t;
    return t;
  }

  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
  double last_ = 0.0;
};

inline double rms_or_nan(std::span<const double> f, const std::optional<Signal> &truth) {
  return truth ? relative_rms(f, truth->values()) : std::nan("");
}

}  // namespace detail

/// Full reconstruction from the one-step EM initializer. Stops at max_iters,
/// the wall-clock budget (checked between iterations), a relative change
/// ||f^{k+1} - f^k|| / max(||f^k||, 1) <= rel_change_tol, or a stall.
inline SolveTrace run_spiral(const SensingMatrix &A, const CountVector &y, const SolverConfig &cfg,
                             const std::optional<Signal> &truth = std::nullopt,
                             const IterateObserver &observer = {}) {
  cfg.validate();
  if (truth) require_same_size(truth->size(), A.cols(), "run_spiral truth");
  detail::Stopwatch clock;
  SpiralState st = spiral_start(std::move(em_init(A, y)).release(), A, y, cfg);

  SolveTrace trace;
  trace.records.push_back({0, st.objective.total, st.alpha, detail::rms_or_nan(st.f, truth), clock.lap()});
  if (observer) observer(0, st.f);
  trace.stop_reason = "max_iters";
  while (st.iteration < cfg.max_iters) {
    if (clock.elapsed() >= cfg.time_budget) {
      trace.stop_reason = "time_budget";
      break;
    }
    spiral_iterate(st, A, y, cfg);
    if (st.stalled) {
      trace.stalled = true;
      trace.stop_reason = "stalled";
      break;
    }
    trace.records.push_back({st.iteration, st.objective.total, st.alpha, detail::rms_or_nan(st.f, truth), clock.lap()});
    if (observer) observer(st.iteration, st.f);
    double change = 0.0;
    for (std::size_t j = 0; j < st.f.size(); ++j) {
      const double d = st.f[j] - st.prev_f[j];
      change += d * d;
    }
    if (std::sqrt(change) / std::max(norm2(st.prev_f), 1.0) <= cfg.rel_change_tol) {
      trace.stop_reason = "converged";
      break;
    }
  }
  trace.estimate = Signal::intensity(std::move(st.f));
  return trace;
}

}  // namespace spiral
