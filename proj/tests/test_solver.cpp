#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <thread>

#include "oracles.hpp"
#include "spiral/bench.hpp"
#include "spiral/solver.hpp"
#include "test_helpers.hpp"

using namespace spiral;
using testing_support::identity_matrix;
using testing_support::random_counts;
using testing_support::random_matrix;

namespace {

std::vector<double> counts_as_signal(const CountVector &y) { return y.as_doubles(); }

SolverConfig config(PenaltyKind p, double tau, bool monotone = false) {
  SolverConfig c;
  c.penalty = p;
  c.tau = tau;
  c.monotone = monotone;
  return c;
}

}  // namespace

// ------------------------------------------------------------ BB step

TEST(BbStep, ScaledGradientDifferenceGivesTheScale) {
  const auto df = oracle::random_vector(10, -1, 1);
  for (double c : {1e-3, 0.5, 4.0, 250.0}) {
    std::vector<double> dg(df);
    for (double &v : dg) v *= c;
    EXPECT_NEAR(bb_step(df, dg, 1e-8, 1e8, 1.0), c, 1e-12 * c);
  }
  std::vector<double> dg(df);
  for (double &v : dg) v *= 1e10;
  EXPECT_EQ(bb_step(df, dg, 1e-8, 1e8, 1.0), 1e8);
  for (double &v : dg) v *= 1e-25;
  EXPECT_EQ(bb_step(df, dg, 1e-8, 1e8, 1.0), 1e-8);
}

TEST(BbStep, NonPositiveCurvatureUsesAlphaMax) {
  const std::vector df{1.0, 0.0};
  EXPECT_EQ(bb_step(df, std::vector{-1.0, 0.0}, 1e-8, 1e8, 3.0), 1e8);
  EXPECT_EQ(bb_step(df, std::vector{0.0, 5.0}, 1e-8, 1e8, 3.0), 1e8);
}

TEST(BbStep, ZeroStepKeepsFallback) {
  EXPECT_EQ(bb_step(std::vector{0.0, 0.0}, std::vector{1.0, 2.0}, 1e-8, 1e8, 3.5), 3.5);
}

TEST(BbStep, RayleighQuotientOfQuadratic) {
  // for F(f) = 1/2 f^T H f the BB step is df^T H df / df^T df
  const Eigen::Index m = 6;
  Eigen::MatrixXd B(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) B(i, j) = oracle::uniform(-1, 1);
  const Eigen::MatrixXd H = B.transpose() * B + Eigen::MatrixXd::Identity(m, m);
  for (int trial = 0; trial < 20; ++trial) {
    const auto df = oracle::random_vector(static_cast<std::size_t>(m), -1, 1);
    const Eigen::VectorXd d = oracle::to_eigen(df);
    const auto dg = oracle::from_eigen(H * d);
    const double rq = d.dot(H * d) / d.squaredNorm();
    EXPECT_NEAR(bb_step(df, dg, 1e-8, 1e8, 1.0), rq, 1e-12 * rq);
  }
}

// ------------------------------------------------------------ single iteration

TEST(SpiralIterate, StationaryPointIsFixedWithoutPenalty) {
  const auto A = identity_matrix(8);
  const CountVector y(std::vector<CountVector::value_type>{3, 1, 4, 1, 5, 9, 2, 6});
  const auto f = counts_as_signal(y);
  for (auto p : {PenaltyKind::canonical_l1, PenaltyKind::ortho_l1, PenaltyKind::partition, PenaltyKind::partition_ti}) {
    const auto cfg = config(p, 0.0);
    auto st = spiral_start(f, A, y, cfg);
    for (double g : st.grad) EXPECT_EQ(g, 0.0);
    spiral_iterate(st, A, y, cfg);
    for (std::size_t j = 0; j < 8; ++j) EXPECT_NEAR(st.f[j], f[j], 1e-9) << to_string(p);
  }
}

TEST(SpiralIterate, CanonicalStepIsShiftedPositivePart) {
  const auto A = random_matrix(16, 32, 4);
  const auto y = random_counts(16, 0, 20);
  const auto Ad = oracle::dense(A);
  const auto yd = y.as_doubles();
  const auto f0 = oracle::em_init_dense(Ad, yd);
  auto cfg = config(PenaltyKind::canonical_l1, 0.3);
  auto st = spiral_start(f0, A, y, cfg);

  // first step: alpha_0
  auto g = oracle::gradient_dense(Ad, f0, yd);
  std::vector<double> expect(32);
  for (std::size_t j = 0; j < 32; ++j) expect[j] = std::max(f0[j] - g[j] / cfg.alpha0 - cfg.tau / cfg.alpha0, 0.0);
  spiral_iterate(st, A, y, cfg);
  ASSERT_EQ(st.alpha, cfg.alpha0);
  for (std::size_t j = 0; j < 32; ++j) EXPECT_NEAR(st.f[j], expect[j], 1e-10);

  // second step: BB curvature from the first difference
  const auto g1 = oracle::gradient_dense(Ad, st.f, yd);
  std::vector<double> df(32), dg(32);
  for (std::size_t j = 0; j < 32; ++j) {
    df[j] = st.f[j] - f0[j];
    dg[j] = g1[j] - g[j];
  }
  const Eigen::VectorXd d = oracle::to_eigen(df);
  const double alpha = std::clamp(d.dot(oracle::to_eigen(dg)) / d.squaredNorm(), cfg.alpha_min, cfg.alpha_max);
  const auto f1 = st.f;
  spiral_iterate(st, A, y, cfg);
  if (std::isfinite(st.objective.total) && st.alpha == alpha) {
    for (std::size_t j = 0; j < 32; ++j)
      EXPECT_NEAR(st.f[j], std::max(f1[j] - g1[j] / alpha - cfg.tau / alpha, 0.0), 1e-9);
  } else {
    // the BB candidate was rejected and alpha doubled
    EXPECT_GT(st.alpha, alpha);
  }
}

TEST(SpiralIterate, InfeasibleStartIsAnError) {
  // row 1 has no entries but a positive count: A f = 0 there for every f
  const SensingMatrix A(2, 2, {{0, 0, 1.0}, {0, 1, 1.0}});
  const CountVector y(std::vector<CountVector::value_type>{3, 2});
  EXPECT_THROW(spiral_start(std::vector{1.0, 1.0}, A, y, config(PenaltyKind::canonical_l1, 0.1)), Error);
  EXPECT_THROW(run_spiral(A, y, config(PenaltyKind::canonical_l1, 0.1)), Error);
}

TEST(SpiralIterate, ZeroStartIsLifted) {
  const auto A = identity_matrix(4);
  const CountVector y(std::vector<CountVector::value_type>{1, 2, 3, 4});
  auto st = spiral_start(std::vector(4, 0.0), A, y, config(PenaltyKind::canonical_l1, 0.1));
  for (double v : st.f) EXPECT_EQ(v, 1e-12);
  EXPECT_TRUE(std::isfinite(st.objective.total));
}

// ------------------------------------------------------------ full runs

TEST(RunSpiral, MonotoneObjectiveNeverIncreases) {
  for (auto p : {PenaltyKind::canonical_l1, PenaltyKind::ortho_l1, PenaltyKind::partition, PenaltyKind::partition_ti}) {
    for (int trial = 0; trial < 5; ++trial) {
      const auto A = random_matrix(24, 32, 6);
      const auto y = random_counts(24, 0, 30);
      auto cfg = config(p, oracle::uniform(0.05, 2.0), true);
      cfg.max_iters = 60;
      const auto trace = run_spiral(A, y, cfg);
      ASSERT_GE(trace.records.size(), 2u);
      for (std::size_t k = 1; k < trace.records.size(); ++k)
        ASSERT_LE(trace.records[k].objective, trace.records[k - 1].objective) << to_string(p) << " k=" << k;
    }
  }
}

TEST(RunSpiral, TwoPhaseModeIsMonotoneAfterSwitch) {
  const auto A = random_matrix(24, 32, 6);
  const auto y = random_counts(24, 0, 30);
  auto cfg = config(PenaltyKind::partition_ti, 0.5);
  cfg.monotone_after = 10;
  cfg.max_iters = 80;
  const auto trace = run_spiral(A, y, cfg);
  for (std::size_t k = 11; k < trace.records.size(); ++k)
    ASSERT_LE(trace.records[k].objective, trace.records[k - 1].objective);
}

TEST(RunSpiral, IdentityBasisDualMatchesCanonical) {
  for (int trial = 0; trial < 5; ++trial) {
    const auto A = random_matrix(20, 16, 5);
    const auto y = random_counts(20, 0, 25);
    auto canonical = config(PenaltyKind::canonical_l1, 0.4);
    canonical.max_iters = 40;
    auto dual = canonical;
    dual.penalty = PenaltyKind::ortho_l1;
    dual.basis = OrthoBasis::Kind::identity;
    dual.inner = {10000, 1e-14};
    const auto a = run_spiral(A, y, canonical);
    const auto b = run_spiral(A, y, dual);
    ASSERT_EQ(a.records.size(), b.records.size());
    for (std::size_t k = 0; k < a.records.size(); ++k) {
      EXPECT_NEAR(a.records[k].objective, b.records[k].objective, 1e-8 * (1 + std::abs(a.records[k].objective)));
      EXPECT_NEAR(a.records[k].alpha, b.records[k].alpha, 1e-8 * a.records[k].alpha);
    }
    for (std::size_t j = 0; j < 16; ++j) EXPECT_NEAR(a.estimate[j], b.estimate[j], 1e-8);
  }
}

TEST(RunSpiral, IteratesFeasibleStepsBoundedTimesIncreasing) {
  for (auto p : {PenaltyKind::canonical_l1, PenaltyKind::ortho_l1, PenaltyKind::partition, PenaltyKind::partition_ti}) {
    const auto A = random_matrix(32, 64, 8);
    const auto y = random_counts(32, 0, 40);
    auto cfg = config(p, 0.5);
    cfg.max_iters = 100;
    std::size_t seen = 0;
    const auto trace = run_spiral(A, y, cfg, std::nullopt, [&](std::size_t k, std::span<const double> f) {
      EXPECT_EQ(k, seen++);
      for (double v : f) ASSERT_GE(v, 0.0);
    });
    EXPECT_EQ(seen, trace.records.size());
    for (std::size_t k = 0; k < trace.records.size(); ++k) {
      const auto &r = trace.records[k];
      EXPECT_GE(r.alpha, cfg.alpha_min);
      EXPECT_LE(r.alpha, cfg.alpha_max);
      EXPECT_TRUE(std::isnan(r.rms));
      if (k > 0) {
        EXPECT_GT(r.seconds, trace.records[k - 1].seconds);
      }
    }
    if (trace.stop_reason == "max_iters") {
      EXPECT_EQ(trace.iterations(), cfg.max_iters);
    }
  }
}

TEST(RunSpiral, MonotoneFinalObjectiveNotAboveInitial) {
  const auto A = identity_matrix(32);
  const auto y = random_counts(32, 1, 30);
  auto cfg = config(PenaltyKind::canonical_l1, 0.2, true);
  cfg.max_iters = 200;
  const auto trace = run_spiral(A, y, cfg);
  EXPECT_LE(trace.records.back().objective, trace.records.front().objective);
}

TEST(RunSpiral, StallsWhenEveryCandidateIsInfeasible) {
  // a huge penalty zeroes every candidate, so A f = 0 against positive counts
  const auto A = identity_matrix(4);
  const CountVector y(std::vector<CountVector::value_type>{5, 5, 5, 5});
  auto cfg = config(PenaltyKind::canonical_l1, 1e14);
  const auto trace = run_spiral(A, y, cfg);
  EXPECT_TRUE(trace.stalled);
  EXPECT_EQ(trace.stop_reason, "stalled");
  EXPECT_EQ(trace.records.size(), 1u);
  EXPECT_EQ(trace.estimate.vector(), y.as_doubles());
}

TEST(RunSpiral, TimeBudgetStopsRun) {
  const auto inst = make_instance(ExperimentConfig{}, 0);
  auto cfg = config(PenaltyKind::partition_ti, 1.0);
  cfg.max_iters = 1000000;
  cfg.rel_change_tol = 0.0;
  cfg.time_budget = 0.2;
  const auto trace = run_spiral(inst.A, inst.y, cfg, inst.truth);
  EXPECT_EQ(trace.stop_reason, "time_budget");
  EXPECT_GE(trace.records.back().seconds, 0.0);
  EXPECT_LT(trace.records.back().seconds, 0.2 + 0.5);
  EXPECT_TRUE(std::isfinite(trace.final_rms()));
}

TEST(RunSpiral, ConvergesOnRelativeChange) {
  const auto A = identity_matrix(8);
  const CountVector y(std::vector<CountVector::value_type>{3, 1, 4, 1, 5, 9, 2, 6});
  auto cfg = config(PenaltyKind::canonical_l1, 0.0);
  const auto trace = run_spiral(A, y, cfg);
  EXPECT_EQ(trace.stop_reason, "converged");
}

TEST(RunSpiral, FiftyIterationsOnDefaultInstanceWithinBudget) {
  const auto inst = make_instance(ExperimentConfig{}, 0);
  auto cfg = config(PenaltyKind::partition_ti, 1.0);
  cfg.max_iters = 50;
  cfg.rel_change_tol = 0.0;
  const auto trace = run_spiral(inst.A, inst.y, cfg, inst.truth);
  EXPECT_EQ(trace.iterations(), 50u);
  EXPECT_LT(trace.records.back().seconds, 3.0);
}

TEST(RunSpiral, ConcurrentRunsMatchSequential) {
  const auto inst = make_instance(ExperimentConfig{}, 3);
  auto cfg = config(PenaltyKind::partition_ti, 1.0);
  cfg.max_iters = 30;
  const auto ref = run_spiral(inst.A, inst.y, cfg, inst.truth);
  std::vector<SolveTrace> out(3);
  {
    std::vector<std::jthread> pool;
    for (auto &o : out) pool.emplace_back([&] { o = run_spiral(inst.A, inst.y, cfg, inst.truth); });
  }
  for (const auto &o : out) EXPECT_EQ(o.estimate, ref.estimate);
}

TEST(RunSpiral, RejectsInvalidConfig) {
  const auto A = identity_matrix(4);
  const CountVector y(std::vector<CountVector::value_type>{1, 2, 3, 4});
  auto bad = config(PenaltyKind::canonical_l1, -1.0);
  EXPECT_THROW(run_spiral(A, y, bad), Error);
  bad = config(PenaltyKind::canonical_l1, 1.0);
  bad.alpha_min = 2e8;
  EXPECT_THROW(run_spiral(A, y, bad), Error);
  bad = config(PenaltyKind::canonical_l1, 1.0);
  bad.time_budget = 0.0;
  EXPECT_THROW(run_spiral(A, y, bad), Error);
  const Signal wrong = Signal::intensity(std::vector(3, 1.0));
  EXPECT_THROW(run_spiral(A, y, config(PenaltyKind::canonical_l1, 1.0), wrong), Error);
}

// ------------------------------------------------------------ trace CSV

TEST(TraceCsv, RoundTripsExactly) {
  const auto A = random_matrix(16, 16, 4);
  const auto y = random_counts(16, 0, 10);
  auto cfg = config(PenaltyKind::partition, 0.3);
  cfg.max_iters = 20;
  const auto truth = Signal::intensity(oracle::random_vector(16, 0, 3));
  const auto trace = run_spiral(A, y, cfg, truth);
  std::stringstream ss;
  write_trace_csv(ss, trace);
  const auto back = read_trace_csv(ss);
  ASSERT_EQ(back.size(), trace.records.size());
  for (std::size_t k = 0; k < back.size(); ++k) {
    EXPECT_EQ(back[k].iter, trace.records[k].iter);
    EXPECT_EQ(back[k].objective, trace.records[k].objective);
    EXPECT_EQ(back[k].alpha, trace.records[k].alpha);
    EXPECT_EQ(back[k].rms, trace.records[k].rms);
    EXPECT_EQ(back[k].seconds, trace.records[k].seconds);
  }
}

TEST(TraceCsv, NanAndInfRoundTrip) {
  SolveTrace t;
  t.records.push_back({0, kInfinity, std::nan(""), std::nan(""), 0.5});
  std::stringstream ss;
  write_trace_csv(ss, t);
  EXPECT_EQ(ss.str(), "iter,objective,alpha,rms,seconds\n0,inf,nan,nan,0.5\n");
  const auto back = read_trace_csv(ss);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_TRUE(std::isinf(back[0].objective));
  EXPECT_TRUE(std::isnan(back[0].alpha));
}

TEST(TraceCsv, MalformedInputNamesLine) {
  auto expect_line = [](const std::string &text, const std::string &needle) {
    std::istringstream is(text);
    try {
      read_trace_csv(is);
      ADD_FAILURE() << "no error for " << text;
    } catch (const Error &e) {
      EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
    }
  };
  expect_line("iter,obj\n", "line 1");
  expect_line("iter,objective,alpha,rms,seconds\n0,1,2,3,4\n1,1,2,3\n", "line 3");
  expect_line("iter,objective,alpha,rms,seconds\n0,1,x,3,4\n", "line 2");
}
