// Acceptance checks, one PASS/FAIL line per criterion. Criterion 6 runs the
// quick protocol (3 seeds, 4 tau values, orderings only) unless --full is
// given, which runs 10 seeds and 8 tau values and adds the RMS band.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "spiral/spiral.hpp"
#include "test_helpers.hpp"

using namespace spiral;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Check {
  int id;
  std::string name;
  std::function<Outcome()> run;
};

std::string fmt(const char *f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// 1: DP against exhaustive enumeration
Outcome partition_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  std::size_t mismatched = 0, draws = 0;
  for (std::size_t m : {2u, 4u, 8u, 16u}) {
    for (int trial = 0; trial < 100; ++trial, ++draws) {
      const auto s = oracle::random_vector(m, -1.0, 3.0);
      const double tau = oracle::uniform(0.0, 2.0);
      const auto fit = rdp_denoise(s, tau);
      const auto brute = oracle::best_partition(s, tau);
      worst = std::max(worst, std::abs(fit.cost - brute.cost));
      bool same = fit.intervals.size() == brute.intervals.size();
      for (std::size_t i = 0; same && i < fit.intervals.size(); ++i)
        same = fit.intervals[i].start == brute.intervals[i].start && fit.intervals[i].length == brute.intervals[i].length;
      mismatched += !same;
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {worst <= 1e-12 && mismatched == 0 && secs < 10.0,
          std::to_string(draws) + " draws, max cost diff " + fmt("%.2e", worst) + ", " + std::to_string(mismatched) +
              " partition mismatches, " + fmt("%.2f", secs) + " s"};
}

// 2: dual solver gap, synthesis feasibility, identity reduction
Outcome dual_solver() {
  double worst_gap = 0.0, worst_feas = 0.0, worst_id = 0.0;
  std::size_t unconverged = 0, max_sweeps = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t m = std::size_t{1} << static_cast<int>(oracle::uniform(1, 7));  // 2..64
    const auto W = OrthoBasis::haar(m);
    const auto s = oracle::random_vector(m, -2.0, 2.0);
    const double w = oracle::uniform(0.01, 1.0);
    const auto res = prox_ortho_dual(s, w, W, 10000, 1e-6, [&](const DualState &st) {
      for (double v : W.synthesize(st.theta)) worst_feas = std::min(worst_feas, v);
    });
    unconverged += !res.converged;
    worst_gap = std::max(worst_gap, res.gap);
    max_sweeps = std::max(max_sweeps, res.iterations);
  }
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t m = 1 + static_cast<std::size_t>(oracle::uniform(0, 64));
    const auto s = oracle::random_vector(m, -3.0, 3.0);
    const double w = oracle::uniform(0.0, 2.0);
    const auto res = prox_ortho_dual(s, w, OrthoBasis::identity(m), 10000, 1e-12);
    const auto ref = prox_canonical(s, w);
    for (std::size_t j = 0; j < m; ++j) worst_id = std::max(worst_id, std::abs(res.f[j] - ref[j]));
  }
  return {unconverged == 0 && worst_gap <= 1e-6 && worst_feas >= -1e-12 && worst_id <= 1e-10,
          "max gap " + fmt("%.2e", worst_gap) + " (max " + std::to_string(max_sweeps) + " sweeps), min W theta " +
              fmt("%.2e", worst_feas) + ", identity max diff " + fmt("%.2e", worst_id)};
}

// 3: analytic gradient against central differences
Outcome gradient_check() {
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 4 + static_cast<std::size_t>(oracle::uniform(0, 20));
    const std::size_t m = 4 + static_cast<std::size_t>(oracle::uniform(0, 20));
    const auto A = testing_support::random_matrix(n, m, std::min<std::size_t>(m, 3));
    const auto y = testing_support::random_counts(n, 0, 30);
    const auto f = oracle::random_vector(m, 0.2, 3.0);
    const auto g = poisson_nll_gradient(f, A, y);
    const auto fd = oracle::finite_difference_gradient([&](const std::vector<double> &x) { return poisson_nll(x, A, y); }, f);
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      num += (g[j] - fd[j]) * (g[j] - fd[j]);
      den += g[j] * g[j];
    }
    worst = std::max(worst, std::sqrt(num) / std::max(std::sqrt(den), 1e-12));
  }
  return {worst <= 1e-5, "100 points, max relative error " + fmt("%.2e", worst)};
}

// 4: pure EM never raises the NLL
Outcome em_monotone() {
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto A = testing_support::random_matrix(16, 32, 6);
    const auto y = testing_support::random_counts(16, 0, 40);
    auto f = em_init(A, y).vector();
    double prev = poisson_nll(f, A, y);
    for (int k = 0; k < 100; ++k) {
      f = em_e_step(f, A, y);
      const double cur = poisson_nll(f, A, y);
      worst = std::max(worst, cur - prev);
      prev = cur;
    }
  }
  return {worst <= 1e-9, "20 instances x 100 iterations, max increase " + fmt("%.2e", worst)};
}

// 5: nonnegative iterates and strictly increasing timestamps everywhere
Outcome feasibility() {
  std::size_t runs = 0, iterates = 0, negatives = 0, clock_faults = 0;
  const auto check_trace = [&](const SolveTrace &t) {
    ++runs;
    for (std::size_t k = 1; k < t.records.size(); ++k) clock_faults += !(t.records[k].seconds > t.records[k - 1].seconds);
  };
  const IterateObserver watch = [&](std::size_t, std::span<const double> f) {
    ++iterates;
    for (double v : f) negatives += v < 0.0;
  };
  std::vector<Instance> instances;
  ExperimentConfig small;
  small.m = 64;
  small.n = 48;
  small.k = 8;
  for (std::uint64_t seed = 0; seed < 10; ++seed) instances.push_back(make_instance(small, seed));
  instances.push_back(make_instance(ExperimentConfig{}, 0));
  for (const auto &inst : instances) {
    for (auto p : {PenaltyKind::canonical_l1, PenaltyKind::ortho_l1, PenaltyKind::partition, PenaltyKind::partition_ti}) {
      for (bool monotone : {false, true}) {
        SolverConfig c;
        c.penalty = p;
        c.tau = 0.5;
        c.monotone = monotone;
        c.max_iters = 100;
        check_trace(run_spiral(inst.A, inst.y, c, inst.truth, watch));
      }
    }
    for (bool ti : {false, true}) {
      EmConfig c;
      c.tau = 0.2;
      c.translation_invariant = ti;
      c.max_iters = 100;
      check_trace(run_em_mple(inst.A, inst.y, c, inst.truth, watch));
    }
  }
  return {negatives == 0 && clock_faults == 0,
          std::to_string(runs) + " runs, " + std::to_string(iterates) + " iterates, " + std::to_string(negatives) +
              " negative entries, " + std::to_string(clock_faults) + " non-increasing timestamps"};
}

// 6: benchmark orderings (and the RMS band in full mode)
Outcome benchmark(bool full, std::size_t threads, const std::string &out_dir) {
  ExperimentConfig cfg = full ? ExperimentConfig{} : ExperimentConfig::quick();
  cfg.methods = full ? std::vector<std::string>{"spiral_ti", "spiral_tv", "em_ti", "em_tv", "spiral_l1"}
                     : std::vector<std::string>{"spiral_ti", "em_ti", "spiral_l1"};
  cfg.threads = threads;
  cfg.out_dir = out_dir;
  cfg.write_traces = false;
  const auto t0 = std::chrono::steady_clock::now();
  const auto res = run_benchmark(cfg);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double ti = res.summary_for("spiral_ti").median_rms;
  const double em = res.summary_for("em_ti").median_rms;
  const double l1 = res.summary_for("spiral_l1").median_rms;
  bool pass = ti < em && ti < l1;
  std::ostringstream os;
  os << (full ? "full" : "quick") << " (" << cfg.seeds.size() << " seeds, " << cfg.tau_points << " tau, "
     << fmt("%.0f", secs) << " s):";
  for (const auto &s : res.summary) os << ' ' << s.method << '=' << fmt("%.4f", s.median_rms) << "@" << fmt("%.3g", s.best_tau);
  os << "; TI<EM " << (ti < em ? "yes" : "no") << ", TI<l1 " << (ti < l1 ? "yes" : "no");
  if (full) {
    pass = pass && ti <= 0.25;
    os << ", TI<=0.25 " << (ti <= 0.25 ? "yes" : "no");
  }
  return {pass, os.str()};
}

// 7: merged RDP intervals carry no Haar detail
Outcome hereditary() {
  double worst = 0.0;
  std::size_t checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t m = std::size_t{1} << static_cast<int>(oracle::uniform(1, 9));
    const auto s = oracle::random_vector(m, -1.0, 4.0);
    const auto fit = rdp_denoise(s, oracle::uniform(0.05, 3.0));
    const HaarTransform haar(m);
    const auto theta = haar.analyze(fitted_signal(fit));
    for (std::size_t c = 1; c < m; ++c) {
      const auto sup = haar.detail_support(c);
      for (const auto &iv : fit.intervals) {
        if (sup.start >= iv.start && sup.start + sup.length <= iv.start + iv.length) {
          worst = std::max(worst, std::abs(theta[c]));
          ++checked;
        }
      }
    }
  }
  return {worst <= 1e-12, std::to_string(checked) + " interior coefficients, max |theta| " + fmt("%.2e", worst)};
}

// 8: Haar round trip and Parseval
Outcome transform_round_trip() {
  double worst_rt = 0.0, worst_norm = 0.0;
  for (std::size_t m : {8u, 64u, 1024u}) {
    const auto W = OrthoBasis::haar(m);
    for (int trial = 0; trial < 100; ++trial) {
      const auto f = oracle::random_vector(m, -10.0, 10.0);
      const auto theta = W.analyze(f);
      const auto back = W.synthesize(theta);
      for (std::size_t j = 0; j < m; ++j) worst_rt = std::max(worst_rt, std::abs(back[j] - f[j]));
      worst_norm = std::max(worst_norm, std::abs(norm2(theta) - norm2(f)) / norm2(f));
    }
  }
  return {worst_rt <= 1e-12 && worst_norm <= 1e-12,
          "max round-trip error " + fmt("%.2e", worst_rt) + ", max relative norm change " + fmt("%.2e", worst_norm)};
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Acceptance checks"};
  bool full = false;
  std::size_t threads = 0;
  std::string out_dir;
  std::vector<int> only;
  app.add_flag("--full", full, "criterion 6 at full scale (10 seeds, 8 tau, RMS band)");
  app.add_option("--threads", threads, "benchmark worker threads (0 = all cores)");
  app.add_option("--out-dir", out_dir, "write criterion-6 benchmark outputs here");
  app.add_option("--only", only, "run only these criteria");
  CLI11_PARSE(app, argc, argv);

  const std::vector<Check> checks{
      {1, "partition DP matches exhaustive enumeration", partition_oracle},
      {2, "dual solver gap, feasibility and identity reduction", dual_solver},
      {3, "gradient matches central differences", gradient_check},
      {4, "pure EM likelihood is monotone", em_monotone},
      {5, "iterates nonnegative, timestamps increasing", feasibility},
      {6, "benchmark ordering", [&] { return benchmark(full, threads, out_dir); }},
      {7, "hereditary Haar zeros on merged intervals", hereditary},
      {8, "Haar round trip and Parseval", transform_round_trip},
  };
  const std::set<int> selected(only.begin(), only.end());
  int failures = 0;
  for (const auto &c : checks) {
    if (!selected.empty() && !selected.contains(c.id)) continue;
    Outcome r;
    try {
      r = c.run();
    } catch (const std::exception &e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    failures += !r.pass;
    std::printf("%s criterion %d: %s: %s\n", r.pass ? "PASS" : "FAIL", c.id, c.name.c_str(), r.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
