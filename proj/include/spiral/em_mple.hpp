#pragma once

// EM-MPLE baseline: the multiplicative Poisson E-step followed by a
// partition-penalized M-step that denoises the E-step image with the same
// 1/2 ||.||^2 + tau |P| cost used by the SPIRAL partition solver.

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "spiral/partition.hpp"
#include "spiral/poisson_model.hpp"
#include "spiral/sensing_matrix.hpp"
#include "spiral/solver.hpp"
#include "spiral/trace.hpp"
#include "spiral/types.hpp"

namespace spiral {

/// f * A^T(y / Af) / A^T 1, with 0/0 = 0.
inline std::vector<double> em_e_step(std::span<const double> f, const SensingMatrix &A, const CountVector &y) {
  detail::check_model_dims(f, A, y, "em_e_step");
  detail::check_nonnegative(f, "em_e_step");
  const auto col_sums = A.column_sums();
  for (std::size_t j = 0; j < col_sums.size(); ++j)
    if (col_sums[j] <= 0.0) fail("em_e_step: column ", j, " of the sensing matrix is zero");
  const auto Af = A.apply(f);
  std::vector<double> ratio(Af.size(), 0.0);
  for (std::size_t i = 0; i < Af.size(); ++i) {
    if (y[i] == 0) continue;
    if (Af[i] <= 0.0) fail("em_e_step: zero intensity against count ", y[i], " at row ", i);
    ratio[i] = static_cast<double>(y[i]) / Af[i];
  }
  const auto back = A.apply_transpose(ratio);
  std::vector<double> out(f.size());
  for (std::size_t j = 0; j < f.size(); ++j) out[j] = f[j] * back[j] / col_sums[j];
  return out;
}

inline Signal em_e_step(const Signal &f, const SensingMatrix &A, const CountVector &y) {
  return Signal::intensity(em_e_step(f.values(), A, y));
}

struct EmConfig {
  double tau = 0.0;  // 0 turns the M-step into the identity (pure EM)
  bool translation_invariant = false;
  std::size_t max_iters = 1000;
  double time_budget = std::numeric_limits<double>::infinity();

  void validate() const {
    if (!(tau >= 0.0) || !std::isfinite(tau)) fail("EmConfig: tau must be finite and >= 0, got ", tau);
    if (!(time_budget > 0.0)) fail("EmConfig: time budget must be > 0");
  }

  SolverConfig as_penalty() const {
    SolverConfig c;
    c.penalty = translation_invariant ? PenaltyKind::partition_ti : PenaltyKind::partition;
    c.tau = tau;
    return c;
  }
};

/// Alternates E-step and partition M-step from em_init. The trace uses the
/// SPIRAL schema; alpha is NaN. A run stops early (stalled) if the E-step
/// becomes undefined.
inline SolveTrace run_em_mple(const SensingMatrix &A, const CountVector &y, const EmConfig &cfg,
                              const std::optional<Signal> &truth = std::nullopt,
                              const IterateObserver &observer = {}) {
  cfg.validate();
  if (truth) require_same_size(truth->size(), A.cols(), "run_em_mple truth");
  if (!is_power_of_two(A.cols())) fail("run_em_mple: signal length ", A.cols(), " is not a power of two");
  const SolverConfig pen = cfg.as_penalty();
  const auto objective = [&](std::span<const double> f) {
    return ObjectiveValue::make(poisson_nll(f, A, y), penalty_value(pen, f)).total;
  };

  detail::Stopwatch clock;
  auto f = std::move(em_init(A, y)).release();
  SolveTrace trace;
  trace.records.push_back({0, objective(f), std::nan(""), detail::rms_or_nan(f, truth), clock.lap()});
  if (observer) observer(0, f);
  trace.stop_reason = "max_iters";
  for (std::size_t k = 1; k <= cfg.max_iters; ++k) {
    if (clock.elapsed() >= cfg.time_budget) {
      trace.stop_reason = "time_budget";
      break;
    }
    if (!std::isfinite(trace.records.back().objective)) {
      trace.stalled = true;
      trace.stop_reason = "stalled";
      break;
    }
    const auto e = em_e_step(f, A, y);
    f = cfg.translation_invariant ? rdp_denoise_ti(e, cfg.tau) : fitted_signal(rdp_denoise(e, cfg.tau));
    trace.records.push_back({k, objective(f), std::nan(""), detail::rms_or_nan(f, truth), clock.lap()});
    if (observer) observer(k, f);
  }
  trace.estimate = Signal::intensity(std::move(f));
  return trace;
}

}  // namespace spiral
