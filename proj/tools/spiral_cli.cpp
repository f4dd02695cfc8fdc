// Command-line front end; see --help for the subcommands.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "spiral/spiral.hpp"

namespace fs = std::filesystem;
using namespace spiral;

namespace {

void add_problem_options(CLI::App *cmd, ExperimentConfig &cfg) {
  cmd->add_option("--m", cfg.m, "signal length (power of two)")->capture_default_str();
  cmd->add_option("--n", cfg.n, "number of measurements")->capture_default_str();
  cmd->add_option("--k", cfg.k, "nonzeros per sensing row")->capture_default_str();
  cmd->add_option("--mean-count", cfg.mean_count, "target mean of A f")->capture_default_str();
  cmd->add_option("--signal-seed", cfg.signal_seed, "test-signal jitter seed (0 = nominal)")->capture_default_str();
}

void print_summary(const BenchmarkResults &res) {
  std::printf("%-22s %12s %12s\n", "method", "best_tau", "median_rms");
  for (const auto &s : res.summary) std::printf("%-22s %12.5g %12.5f\n", s.label.c_str(), s.best_tau, s.median_rms);
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Penalized Poisson reconstruction from compressed measurements"};
  app.require_subcommand(1);

  // gen
  ExperimentConfig gen_cfg;
  std::uint64_t gen_seed = 0;
  std::string gen_out = ".";
  auto *gen = app.add_subcommand("gen", "write a synthetic instance (matrix.txt, truth.txt, counts.txt)");
  add_problem_options(gen, gen_cfg);
  gen->add_option("--seed", gen_seed, "instance seed")->capture_default_str();
  gen->add_option("--out-dir", gen_out, "output directory")->capture_default_str();

  // solve
  ExperimentConfig solve_cfg;
  std::uint64_t solve_seed = 0;
  std::string method = "spiral_ti", matrix_path, counts_path, truth_path, solve_out = ".";
  double tau = 1.0, solve_budget = 3.0;
  std::size_t solve_iters = 1000000;
  bool monotone = false;
  auto *solve = app.add_subcommand("solve", "reconstruct one instance and write estimate.txt and trace.csv");
  add_problem_options(solve, solve_cfg);
  solve->add_option("--seed", solve_seed, "instance seed when no files are given")->capture_default_str();
  solve->add_option("--method", method, "reconstruction method")->capture_default_str();
  solve->add_option("--tau", tau, "penalty weight")->capture_default_str();
  solve->add_option("--budget-secs", solve_budget, "wall-clock budget")->capture_default_str();
  solve->add_option("--max-iters", solve_iters, "iteration cap")->capture_default_str();
  solve->add_option("--matrix", matrix_path, "sensing matrix file");
  solve->add_option("--counts", counts_path, "count vector file");
  solve->add_option("--truth", truth_path, "ground truth file (enables RMS)");
  solve->add_flag("--monotone", monotone, "monotone acceptance (SPIRAL only)");
  solve->add_option("--out-dir", solve_out, "output directory")->capture_default_str();

  // bench
  ExperimentConfig bench_cfg;
  std::vector<std::uint64_t> bench_seeds;
  std::vector<double> bench_taus;
  bool quick = false, no_traces = false;
  auto *bench = app.add_subcommand("bench", "run the tau-by-seed benchmark for several methods");
  add_problem_options(bench, bench_cfg);
  bench->add_flag("--quick", quick, "3 seeds and 4 tau values per method");
  bench->add_option("--seed", bench_seeds, "seeds (default 0..9)");
  bench->add_option("--method", bench_cfg.methods, "methods")->capture_default_str();
  bench->add_option("--tau", bench_taus, "explicit tau grid for every method (default: pilot search)");
  bench->add_option("--tau-points", bench_cfg.tau_points, "pilot-centred grid size")->capture_default_str();
  bench->add_option("--tau-decades", bench_cfg.tau_decades, "pilot-centred grid width")->capture_default_str();
  bench->add_option("--budget-secs", bench_cfg.budget_secs, "wall-clock budget per run")->capture_default_str();
  bench->add_option("--pilot-budget-secs", bench_cfg.pilot_budget_secs, "budget per pilot run")->capture_default_str();
  bench->add_option("--max-iters", bench_cfg.max_iters, "iteration cap per run")->capture_default_str();
  bench->add_option("--threads", bench_cfg.threads, "worker threads (0 = all cores)")->capture_default_str();
  bench->add_option("--out-dir", bench_cfg.out_dir, "output directory")->required();
  bench->add_flag("--no-traces", no_traces, "skip per-run trace files");

  // plot
  std::vector<std::string> plot_inputs;
  std::string plot_out = "rms_vs_time.svg";
  auto *plot = app.add_subcommand("plot", "draw RMS-vs-time curves from trace CSVs");
  plot->add_option("traces", plot_inputs, "trace CSV files")->required();
  plot->add_option("-o,--out", plot_out, "SVG output")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      gen_cfg.validate();
      const auto inst = make_instance(gen_cfg, gen_seed);
      fs::create_directories(gen_out);
      save_matrix((fs::path(gen_out) / "matrix.txt").string(), inst.A);
      save_values((fs::path(gen_out) / "truth.txt").string(), inst.truth.values());
      save_counts((fs::path(gen_out) / "counts.txt").string(), inst.y);
      std::printf("wrote %s (N=%zu m=%zu k=%zu seed=%llu, mean count %.3f)\n", gen_out.c_str(), gen_cfg.n, gen_cfg.m,
                  gen_cfg.k, static_cast<unsigned long long>(gen_seed), inst.y.mean());
    } else if (*solve) {
      const auto &spec = find_method(method);
      if (!(tau > 0.0)) fail("--tau must be > 0, got ", tau);
      if (!(solve_budget > 0.0)) fail("--budget-secs must be > 0, got ", solve_budget);
      if (matrix_path.empty() != counts_path.empty()) fail("--matrix and --counts must be given together");
      std::optional<SensingMatrix> A;
      std::optional<CountVector> y;
      std::optional<Signal> truth;
      if (!matrix_path.empty()) {
        A = load_matrix(matrix_path);
        y = load_counts(counts_path);
        if (!truth_path.empty()) truth = Signal::intensity(load_values(truth_path));
      } else {
        solve_cfg.validate();
        auto inst = make_instance(solve_cfg, solve_seed);
        A = std::move(inst.A);
        y = std::move(inst.y);
        truth = std::move(inst.truth);
      }
      SolveTrace trace;
      if (monotone && spec.family == MethodSpec::Family::spiral) {
        SolverConfig c;
        c.penalty = spec.penalty;
        c.tau = tau;
        c.max_iters = solve_iters;
        c.time_budget = solve_budget;
        c.monotone = true;
        trace = run_spiral(*A, *y, c, truth);
      } else {
        trace = run_method(spec, *A, *y, tau, solve_budget, solve_iters, truth);
      }
      fs::create_directories(solve_out);
      save_values((fs::path(solve_out) / "estimate.txt").string(), trace.estimate.values());
      save_trace((fs::path(solve_out) / "trace.csv").string(), trace);
      std::printf("%s tau=%g: %zu iterations (%s), objective %.10g, rms %.5f\n", spec.label.c_str(), tau,
                  trace.iterations(), trace.stop_reason.c_str(), trace.records.back().objective, trace.final_rms());
    } else if (*bench) {
      if (quick) {
        const auto q = ExperimentConfig::quick();
        bench_cfg.seeds = q.seeds;
        if (bench->count("--tau-points") == 0) bench_cfg.tau_points = q.tau_points;
        if (bench->count("--tau-decades") == 0) bench_cfg.tau_decades = q.tau_decades;
      }
      if (!bench_seeds.empty()) bench_cfg.seeds = bench_seeds;
      if (!bench_taus.empty())
        for (const auto &name : bench_cfg.methods) bench_cfg.tau_grid[name] = bench_taus;
      bench_cfg.write_traces = !no_traces;
      const auto res = run_benchmark(bench_cfg);
      print_summary(res);
      std::printf("results in %s\n", bench_cfg.out_dir.c_str());
    } else if (*plot) {
      emit_plot(plot_inputs, plot_out);
      std::printf("wrote %s\n", plot_out.c_str());
    }
  } catch (const std::exception &e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
