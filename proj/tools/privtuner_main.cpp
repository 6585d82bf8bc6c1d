// privtuner command line: scenario generation, single solves, benchmark
// sweeps and SVG rendering.
//
//   privtuner generate --out scenario.txt --seed 7
//   privtuner solve    --scenario scenario.txt --out-dir out/
//   privtuner sweep    --scenario scenario.txt --config sweep.txt --out-dir out/
//   privtuner plot     --csv out/sweep.csv --out-dir out/
//
// Exit codes: 0 success, 2 infeasible scenario, 3 configuration error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "privtuner/joint.hpp"
#include "privtuner/scenario_io.hpp"
#include "privtuner/svg_chart.hpp"
#include "privtuner/sweep.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInfeasible = 2;
constexpr int kExitConfig = 3;

void set_workers(int workers) {
#ifdef _OPENMP
  if (workers > 0) omp_set_num_threads(workers);
#else
  (void)workers;
#endif
}

int cmd_generate(const std::string& out_path, std::uint64_t seed,
                 const privtuner::io::GenerateParams& params) {
  const privtuner::Scenario scn = privtuner::io::generate_scenario(seed, params);
  privtuner::io::write_scenario_file(scn, out_path);
  std::cout << "wrote " << out_path << " (" << scn.device_count() << " devices)\n";
  return kExitOk;
}

int cmd_solve(const std::string& scenario_path, const std::string& out_dir,
              const privtuner::joint::SolveOptions& opts) {
  const privtuner::Scenario scn = privtuner::io::read_scenario_file(scenario_path);
  const privtuner::joint::SolveResult result = privtuner::joint::solve(scn, opts);

  std::printf("converged=%s iterations=%zu objective=%.10g energy=%.10g privacy=%.10g\n",
              result.trace.converged ? "yes" : "no", result.trace.iterations.size(),
              result.objective, result.trace.iterations.back().energy,
              result.trace.iterations.back().privacy);
  for (std::size_t i = 0; i < scn.device_count(); ++i) {
    const privtuner::Allocation& a = result.allocation;
    std::printf("  device %zu: lambda=%g f=%.6g g=%.6g p=%.6g b=%.6g\n", i, a.lam[i],
                a.f[i], a.g[i], a.p[i], a.b[i]);
  }

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path trace_path = std::filesystem::path(out_dir) / "trace.csv";
    std::ofstream trace(trace_path, std::ios::binary);
    trace << "iteration,objective,energy,privacy,stage1_seconds,stage2_seconds\r\n";
    for (std::size_t i = 0; i < result.trace.iterations.size(); ++i) {
      const auto& it = result.trace.iterations[i];
      char buf[256];
      std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g\r\n", i + 1,
                    it.objective, it.energy, it.privacy, it.stage1_seconds,
                    it.stage2_seconds);
      trace << buf;
    }
    std::cout << "wrote " << trace_path.string() << "\n";
  }
  return kExitOk;
}

int cmd_sweep(const std::string& scenario_path, const std::string& config_path,
              const std::string& out_dir, const privtuner::joint::SolveOptions& opts,
              const std::uint64_t* seed_override) {
  const privtuner::Scenario scn = privtuner::io::read_scenario_file(scenario_path);
  privtuner::sweep::SweepConfig cfg = privtuner::sweep::read_sweep_config_file(config_path);
  if (seed_override) cfg.seed = *seed_override;
  const std::vector<privtuner::sweep::SweepRow> rows =
      privtuner::sweep::run_sweep(scn, cfg, opts);

  std::filesystem::create_directories(out_dir);
  const std::filesystem::path csv_path =
      std::filesystem::path(out_dir) / ("sweep_" + cfg.parameter + ".csv");
  privtuner::sweep::write_rows_csv_file(rows, scn.device_count(), csv_path.string());
  std::cout << "wrote " << csv_path.string() << " (" << rows.size() << " rows)\n";
  return kExitOk;
}

int cmd_plot(const std::string& csv_path, const std::string& out_dir) {
  const std::vector<std::string> files = privtuner::svg::render_plots_csv(csv_path, out_dir);
  for (const std::string& f : files)
    std::cout << "wrote " << (std::filesystem::path(out_dir) / f).string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PrivTuner joint resource allocation"};
  app.require_subcommand(1);
  app.fallthrough(); // global flags may follow the subcommand

  int workers = 0;
  app.add_option("--workers", workers, "worker threads for sweeps and grids (0 = default)");

  // generate
  auto* generate = app.add_subcommand("generate", "write a scenario file");
  std::string gen_out = "scenario.txt";
  std::uint64_t gen_seed = 1;
  privtuner::io::GenerateParams params;
  generate->add_option("--out", gen_out, "output path");
  generate->add_option("--seed", gen_seed, "random seed");
  generate->add_option("--devices", params.devices, "device count");
  generate->add_option("--omega", params.omega, "privacy weight");
  generate->add_option("--f-total", params.f_total_hz, "server CPU budget (Hz)");
  generate->add_option("--b-total", params.b_total_hz, "bandwidth budget (Hz)");
  generate->add_option("--g-max", params.g_max_hz, "device CPU cap (Hz)");
  generate->add_option("--p-max-dbm", params.p_max_dbm, "device power cap (dBm)");
  generate->add_option("--t-max-device", params.t_max_device_s, "device deadline (s)");
  generate->add_option("--t-max-server", params.t_max_server_s, "server deadline (s)");

  // solve
  auto* solve = app.add_subcommand("solve", "solve one scenario");
  std::string solve_scenario;
  std::string solve_out;
  privtuner::joint::SolveOptions opts;
  solve->add_option("--scenario", solve_scenario, "scenario file")->required();
  solve->add_option("--out-dir", solve_out, "directory for the iteration trace");
  solve->add_option("--max-outer", opts.max_outer, "outer iteration cap");
  solve->add_option("--max-inner", opts.max_inner, "fractional programming iteration cap");
  solve->add_option("--eps", opts.eps, "convergence tolerance");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "run a parameter sweep");
  std::string sweep_scenario, sweep_config, sweep_out = "out";
  std::uint64_t sweep_seed = 0;
  sweep->add_option("--scenario", sweep_scenario, "scenario file")->required();
  sweep->add_option("--config", sweep_config, "sweep config file")->required();
  sweep->add_option("--out-dir", sweep_out, "output directory");
  auto* sweep_seed_opt =
      sweep->add_option("--seed", sweep_seed, "override the config seed");
  sweep->add_option("--max-outer", opts.max_outer, "outer iteration cap");
  sweep->add_option("--max-inner", opts.max_inner, "fractional programming iteration cap");
  sweep->add_option("--eps", opts.eps, "convergence tolerance");

  // plot
  auto* plot = app.add_subcommand("plot", "render SVG charts from a sweep CSV");
  std::string plot_csv, plot_out = "out";
  plot->add_option("--csv", plot_csv, "sweep CSV file")->required();
  plot->add_option("--out-dir", plot_out, "output directory");

  CLI11_PARSE(app, argc, argv);
  set_workers(workers);

  try {
    if (generate->parsed()) return cmd_generate(gen_out, gen_seed, params);
    if (solve->parsed()) return cmd_solve(solve_scenario, solve_out, opts);
    if (sweep->parsed())
      return cmd_sweep(sweep_scenario, sweep_config, sweep_out, opts,
                       sweep_seed_opt->count() ? &sweep_seed : nullptr);
    if (plot->parsed()) return cmd_plot(plot_csv, plot_out);
  } catch (const privtuner::InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const privtuner::io::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitOk;
}
