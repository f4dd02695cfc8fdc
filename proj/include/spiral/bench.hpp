#pragma once

// Compressed-sensing benchmark: a piecewise-smooth test signal observed
// through a random binary sensing matrix with Poisson noise, reconstructed by
// each method over a tau grid and a set of seeds under a wall-clock budget.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "spiral/em_mple.hpp"
#include "spiral/io.hpp"
#include "spiral/plot.hpp"
#include "spiral/poisson_model.hpp"
#include "spiral/random.hpp"
#include "spiral/sensing_matrix.hpp"
#include "spiral/solver.hpp"
#include "spiral/trace.hpp"

namespace spiral {

// ---------------------------------------------------------------- methods

struct MethodSpec {
  enum class Family { spiral, em };
  std::string name;
  std::string label;
  Family family = Family::spiral;
  PenaltyKind penalty = PenaltyKind::partition_ti;
};

inline const std::vector<MethodSpec> &all_methods() {
  static const std::vector<MethodSpec> methods{
      {"spiral_ti", "SPIRAL (TI)", MethodSpec::Family::spiral, PenaltyKind::partition_ti},
      {"spiral_tv", "SPIRAL (TV)", MethodSpec::Family::spiral, PenaltyKind::partition},
      {"em_ti", "EM-MPLE (TI)", MethodSpec::Family::em, PenaltyKind::partition_ti},
      {"em_tv", "EM-MPLE (TV)", MethodSpec::Family::em, PenaltyKind::partition},
      {"spiral_l1", "SPIRAL (l1)", MethodSpec::Family::spiral, PenaltyKind::ortho_l1},
      {"spiral_l1_canonical", "SPIRAL (l1, canonical)", MethodSpec::Family::spiral, PenaltyKind::canonical_l1},
  };
  return methods;
}

inline const MethodSpec &find_method(const std::string &name) {
  for (const auto &m : all_methods())
    if (m.name == name) return m;
  std::string valid;
  for (const auto &m : all_methods()) valid += (valid.empty() ? "" : ", ") + m.name;
  fail("unknown method '", name, "'; valid methods: ", valid);
}

// ---------------------------------------------------------------- signal

/// Unscaled piecewise-smooth test shape on m samples: two adjacent plateaus,
/// a linear ramp, a narrow and a wide Gaussian bump, and a low plateau, over
/// a zero background. Seed 0 gives the nominal shape; other seeds jitter the
/// breakpoints and bump centres by up to 1% of the support.
inline std::vector<double> generate_test_signal(std::size_t m, std::uint64_t seed) {
  if (m < 8) fail("generate_test_signal: need m >= 8, got ", m);
  double b[] = {0.10, 0.18, 0.24, 0.34, 0.48, 0.60, 0.72, 0.84, 0.90};
  if (seed != 0) {
    Rng rng(derive_seed(seed, "test-signal"));
    for (double &x : b) x += 0.02 * (rng.uniform() - 0.5);
  }
  std::vector<double> f(m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    const double t = (static_cast<double>(j) + 0.5) / static_cast<double>(m);
    double v = 0.0;
    if (t >= b[0] && t < b[1]) v = 2.0;
    if (t >= b[1] && t < b[2]) v = 6.0;
    if (t >= b[3] && t < b[4]) v = 7.0 * (t - b[3]) / (b[4] - b[3]);
    v += 9.0 * std::exp(-0.5 * std::pow((t - b[5]) / 0.015, 2));
    v += 3.5 * std::exp(-0.5 * std::pow((t - b[6]) / 0.035, 2));
    if (t >= b[7] && t < b[8]) v += 1.5;
    f[j] = v < 1e-3 ? 0.0 : v;
  }
  return f;
}

/// Scales `shape` so that mean(A f) equals `mean_count`.
inline Signal scale_to_mean_count(std::span<const double> shape, const SensingMatrix &A, double mean_count) {
  if (!(mean_count > 0.0)) fail("scale_to_mean_count: mean count must be > 0");
  const auto Af = A.apply(shape);
  const double mean = std::accumulate(Af.begin(), Af.end(), 0.0) / static_cast<double>(Af.size());
  if (!(mean > 0.0)) fail("scale_to_mean_count: signal is invisible to the sensing matrix");
  std::vector<double> out(shape.begin(), shape.end());
  for (double &v : out) v *= mean_count / mean;
  return Signal::intensity(std::move(out));
}

// ---------------------------------------------------------------- config

struct ExperimentConfig {
  std::size_t m = 1024;
  std::size_t n = 512;
  std::size_t k = 32;
  double mean_count = 50.0;
  double budget_secs = 3.0;
  std::size_t max_iters = 1000000;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::uint64_t signal_seed = 0;
  std::vector<std::string> methods{"spiral_ti", "spiral_tv", "em_ti", "em_tv", "spiral_l1"};
  // Explicit grids per method; methods without one get a pilot search.
  std::map<std::string, std::vector<double>> tau_grid;
  std::size_t tau_points = 8;
  double tau_decades = 3.0;
  std::vector<double> pilot_taus{1e-3, 3e-3, 1e-2, 3e-2, 1e-1, 3e-1, 1.0, 3.0, 10.0, 30.0, 100.0, 300.0, 1000.0};
  double pilot_budget_secs = 0.5;
  std::size_t threads = 0;  // 0: hardware concurrency
  std::string out_dir;      // empty: no files
  bool write_traces = true;

  /// 3 seeds and 4 tau values per method.
  static ExperimentConfig quick() {
    ExperimentConfig c;
    c.seeds = {0, 1, 2};
    c.tau_points = 4;
    c.tau_decades = 1.5;
    return c;
  }

  void validate() const {
    if (m == 0 || n == 0 || k == 0) fail("ExperimentConfig: m, N and k must be positive");
    if (k > m) fail("ExperimentConfig: k=", k, " exceeds m=", m);
    if (!is_power_of_two(m)) fail("ExperimentConfig: m=", m, " must be a power of two");
    if (!(mean_count > 0.0)) fail("ExperimentConfig: mean count must be > 0");
    if (!(budget_secs > 0.0)) fail("ExperimentConfig: time budget must be > 0");
    if (seeds.empty()) fail("ExperimentConfig: seed list is empty");
    if (methods.empty()) fail("ExperimentConfig: method list is empty");
    for (const auto &name : methods) find_method(name);
    for (const auto &[name, grid] : tau_grid) {
      find_method(name);
      if (grid.empty()) fail("ExperimentConfig: empty tau grid for ", name);
      for (double t : grid)
        if (!(t > 0.0) || !std::isfinite(t)) fail("ExperimentConfig: tau must be > 0 (", name, ")");
    }
    if (tau_points == 0) fail("ExperimentConfig: tau_points must be positive");
    if (pilot_taus.empty()) fail("ExperimentConfig: pilot tau list is empty");
  }
};

// ---------------------------------------------------------------- runs

struct Instance {
  SensingMatrix A;
  Signal truth;
  CountVector y;
};

/// Draws A from `seed`, redrawing from derived seeds until every column is
/// observed (the EM initializer needs A^T 1 > 0), then scales the test signal
/// and samples counts from the same seed.
inline Instance make_instance(const ExperimentConfig &cfg, std::uint64_t seed) {
  auto covers_all = [](const SensingMatrix &M) {
    const auto cs = M.column_sums();
    return std::all_of(cs.begin(), cs.end(), [](double v) { return v > 0.0; });
  };
  if (cfg.n * cfg.k < cfg.m) fail("make_instance: N*k=", cfg.n * cfg.k, " cannot cover m=", cfg.m, " columns");
  auto A = generate_sensing_matrix(cfg.n, cfg.m, cfg.k, seed);
  for (std::uint64_t attempt = 1; !covers_all(A); ++attempt) {
    if (attempt > 1000) fail("make_instance: no full-coverage sensing matrix after 1000 draws");
    A = generate_sensing_matrix(cfg.n, cfg.m, cfg.k, derive_seed(seed, "cover-" + std::to_string(attempt)));
  }
  auto truth = scale_to_mean_count(generate_test_signal(cfg.m, cfg.signal_seed), A, cfg.mean_count);
  auto y = sample_counts(A.apply(truth.values()), seed);
  return {std::move(A), std::move(truth), std::move(y)};
}

inline SolveTrace run_method(const MethodSpec &method, const SensingMatrix &A, const CountVector &y, double tau,
                             double budget_secs, std::size_t max_iters, const std::optional<Signal> &truth) {
  if (method.family == MethodSpec::Family::em) {
    EmConfig c;
    c.tau = tau;
    c.translation_invariant = method.penalty == PenaltyKind::partition_ti;
    c.max_iters = max_iters;
    c.time_budget = budget_secs;
    return run_em_mple(A, y, c, truth);
  }
  SolverConfig c;
  c.penalty = method.penalty;
  c.tau = tau;
  c.max_iters = max_iters;
  c.time_budget = budget_secs;
  return run_spiral(A, y, c, truth);
}

struct RunResult {
  std::string method;
  std::size_t tau_index = 0;
  double tau = 0.0;
  std::uint64_t seed = 0;
  double rms = 0.0;
  std::size_t iterations = 0;
  double seconds = 0.0;
  std::string stop_reason;
  SolveTrace trace;
};

struct MethodSummary {
  std::string method;
  std::string label;
  double best_tau = 0.0;
  double median_rms = 0.0;
  std::size_t seeds = 0;
};

struct BenchmarkResults {
  std::map<std::string, double> pilot_tau;
  std::map<std::string, std::vector<double>> tau_grid;
  std::vector<RunResult> runs;  // ordered by (method, tau index, seed)
  std::vector<MethodSummary> summary;

  const MethodSummary &summary_for(const std::string &method) const {
    for (const auto &s : summary)
      if (s.method == method) return s;
    fail("no summary for method '", method, "'");
  }
};

inline double median(std::vector<double> v) {
  if (v.empty()) fail("median of empty set");
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

/// `points` log-spaced values spanning `decades` decades centred on `centre`.
inline std::vector<double> log_grid(double centre, double decades, std::size_t points) {
  if (points == 1) return {centre};
  std::vector<double> out(points);
  for (std::size_t i = 0; i < points; ++i) {
    const double e = -decades / 2.0 + decades * static_cast<double>(i) / static_cast<double>(points - 1);
    out[i] = centre * std::pow(10.0, e);
  }
  return out;
}

namespace detail {

/// Runs fn(i) for i in [0, count) on a pool of workers pulling indices from
/// a shared counter. Results must be written to per-index slots.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn &&fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
  }
  for (auto &e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace detail

/// Coarse tau search on the first seed with a short budget; returns the
/// pilot tau with the lowest final RMS per method (ties to the smaller tau).
inline std::map<std::string, double> pilot_tau_search(const ExperimentConfig &cfg,
                                                      const std::vector<std::string> &methods) {
  std::map<std::string, double> out;
  if (methods.empty()) return out;
  const Instance inst = make_instance(cfg, cfg.seeds.front());
  const std::optional<Signal> truth = inst.truth;
  const std::size_t per = cfg.pilot_taus.size();
  std::vector<double> rms(methods.size() * per);
  detail::parallel_for(rms.size(), cfg.threads, [&](std::size_t i) {
    const auto &method = find_method(methods[i / per]);
    rms[i] = run_method(method, inst.A, inst.y, cfg.pilot_taus[i % per], cfg.pilot_budget_secs, cfg.max_iters, truth)
                 .final_rms();
  });
  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    std::size_t best = 0;
    for (std::size_t t = 1; t < per; ++t)
      if (rms[mi * per + t] < rms[mi * per + best]) best = t;
    out[methods[mi]] = cfg.pilot_taus[best];
  }
  return out;
}

inline void write_results(const ExperimentConfig &cfg, const BenchmarkResults &res);

/// Full protocol: tau grids (explicit or pilot-centred), one run per
/// (method, tau, seed), best-tau median RMS per method. Writes files when
/// cfg.out_dir is set.
inline BenchmarkResults run_benchmark(const ExperimentConfig &cfg) {
  cfg.validate();
  BenchmarkResults res;

  std::vector<std::string> need_pilot;
  for (const auto &name : cfg.methods)
    if (!cfg.tau_grid.contains(name)) need_pilot.push_back(name);
  res.pilot_tau = pilot_tau_search(cfg, need_pilot);
  for (const auto &name : cfg.methods) {
    auto it = cfg.tau_grid.find(name);
    res.tau_grid[name] = it != cfg.tau_grid.end() ? it->second
                                                  : log_grid(res.pilot_tau.at(name), cfg.tau_decades, cfg.tau_points);
  }

  std::vector<Instance> instances;
  for (auto seed : cfg.seeds) instances.push_back(make_instance(cfg, seed));

  for (const auto &name : cfg.methods) {
    const auto &grid = res.tau_grid.at(name);
    for (std::size_t t = 0; t < grid.size(); ++t)
      for (auto seed : cfg.seeds) res.runs.push_back({name, t, grid[t], seed, 0.0, 0, 0.0, "", {}});
  }

  detail::parallel_for(res.runs.size(), cfg.threads, [&](std::size_t i) {
    auto &run = res.runs[i];
    const auto pos = std::find(cfg.seeds.begin(), cfg.seeds.end(), run.seed) - cfg.seeds.begin();
    const Instance &inst = instances[static_cast<std::size_t>(pos)];
    run.trace = run_method(find_method(run.method), inst.A, inst.y, run.tau, cfg.budget_secs, cfg.max_iters,
                           std::optional<Signal>(inst.truth));
    run.rms = run.trace.final_rms();
    run.iterations = run.trace.iterations();
    run.seconds = run.trace.records.back().seconds;
    run.stop_reason = run.trace.stop_reason;
  });

  for (const auto &name : cfg.methods) {
    const auto &grid = res.tau_grid.at(name);
    MethodSummary s{name, find_method(name).label, 0.0, kInfinity, cfg.seeds.size()};
    for (std::size_t t = 0; t < grid.size(); ++t) {
      std::vector<double> values;
      for (const auto &run : res.runs)
        if (run.method == name && run.tau_index == t) values.push_back(run.rms);
      const double med = median(values);
      if (med < s.median_rms) {
        s.median_rms = med;
        s.best_tau = grid[t];
      }
    }
    res.summary.push_back(s);
  }

  if (!cfg.out_dir.empty()) write_results(cfg, res);
  return res;
}

inline std::string trace_file_name(const RunResult &run) {
  return run.method + "_tau" + std::to_string(run.tau_index) + "_seed" + std::to_string(run.seed) + ".csv";
}

/// summary.csv, runs.csv, traces/*.csv, best/<method>.csv, rms_vs_time.csv
/// and rms_vs_time.svg (best tau, first seed, one curve per method).
inline void write_results(const ExperimentConfig &cfg, const BenchmarkResults &res) {
  namespace fs = std::filesystem;
  const fs::path dir(cfg.out_dir);
  fs::create_directories(dir);
  using detail::format_real;

  detail::with_output((dir / "summary.csv").string(), [&](std::ostream &os) {
    os << "method,label,best_tau,median_rms,seeds\n";
    for (const auto &s : res.summary)
      os << s.method << ',' << s.label << ',' << format_real(s.best_tau) << ',' << format_real(s.median_rms) << ','
         << s.seeds << '\n';
  });
  detail::with_output((dir / "runs.csv").string(), [&](std::ostream &os) {
    os << "method,tau,seed,rms,iterations,stop_reason,seconds\n";
    for (const auto &r : res.runs)
      os << r.method << ',' << format_real(r.tau) << ',' << r.seed << ',' << format_real(r.rms) << ',' << r.iterations
         << ',' << r.stop_reason << ',' << format_real(r.seconds) << '\n';
  });

  std::vector<std::string> best_traces;
  if (cfg.write_traces) fs::create_directories(dir / "traces");
  fs::create_directories(dir / "best");
  for (const auto &r : res.runs) {
    const auto &s = res.summary_for(r.method);
    const bool best = r.tau == s.best_tau && r.seed == cfg.seeds.front();
    if (cfg.write_traces) save_trace((dir / "traces" / trace_file_name(r)).string(), r.trace);
    if (best) {
      const auto path = dir / "best" / (r.method + ".csv");
      save_trace(path.string(), r.trace);
      best_traces.push_back(path.string());
    }
  }
  detail::with_output((dir / "rms_vs_time.csv").string(), [&](std::ostream &os) {
    os << "method,seconds,rms\n";
    for (const auto &r : res.runs) {
      if (r.tau != res.summary_for(r.method).best_tau || r.seed != cfg.seeds.front()) continue;
      for (const auto &rec : r.trace.records)
        os << r.method << ',' << format_real(rec.seconds) << ',' << format_real(rec.rms) << '\n';
    }
  });
  emit_plot(best_traces, (dir / "rms_vs_time.svg").string());
}

}  // namespace spiral
