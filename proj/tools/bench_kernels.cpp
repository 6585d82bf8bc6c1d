// Benchmarks the OpenMP kernels against their serial references: the grid
// oracle reduction and the sweep runner. Also checks they agree.

#include <chrono>
#include <cstdio>
#include <functional>

#include "privtuner/joint.hpp"
#include "privtuner/oracle.hpp"
#include "privtuner/scenario_io.hpp"
#include "privtuner/sweep.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

double time_of(const std::function<void()>& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  fn();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("OpenMP enabled, max threads %d\n", omp_get_max_threads());
#else
  std::printf("OpenMP disabled; parallel kernels run serially\n");
#endif

  privtuner::io::GenerateParams params;
  params.devices = 2;
  params.omega = 0.0;
  const privtuner::Scenario scn = privtuner::io::generate_scenario(11, params);

  privtuner::oracle::GridSpec grid;
  grid.points_per_axis = 41;

  std::optional<privtuner::oracle::GridResult> serial, parallel;
  const double t_serial =
      time_of([&] { serial = privtuner::oracle::grid_search_serial(scn, grid); });
  const double t_parallel = time_of([&] { parallel = privtuner::oracle::grid_search(scn, grid); });
  std::printf("grid_search %d^2 points: serial %.3fs, parallel %.3fs (x%.2f)\n",
              grid.points_per_axis, t_serial, t_parallel, t_serial / t_parallel);
  if (!serial || !parallel || serial->objective != parallel->objective) {
    std::printf("MISMATCH between serial and parallel grid results\n");
    return 1;
  }

  privtuner::io::GenerateParams sweep_params;
  sweep_params.omega = 0.0;
  const privtuner::Scenario sweep_scn = privtuner::io::generate_scenario(3, sweep_params);
  privtuner::sweep::SweepConfig cfg;
  cfg.parameter = "b_total";
  cfg.values = {5e6, 10e6, 15e6, 20e6, 25e6};
  cfg.allocators = {"proposed", "average", "compute_only", "radio_only"};
  privtuner::joint::SolveOptions opts;

  std::vector<privtuner::sweep::SweepRow> rows_serial, rows_parallel;
  const double s_serial =
      time_of([&] { rows_serial = privtuner::sweep::run_sweep_serial(sweep_scn, cfg, opts); });
  const double s_parallel =
      time_of([&] { rows_parallel = privtuner::sweep::run_sweep(sweep_scn, cfg, opts); });
  std::printf("sweep %zu points: serial %.3fs, parallel %.3fs (x%.2f)\n", rows_serial.size(),
              s_serial, s_parallel, s_serial / s_parallel);

  for (std::size_t i = 0; i < rows_serial.size(); ++i) {
    if (rows_serial[i].status != rows_parallel[i].status ||
        rows_serial[i].objective != rows_parallel[i].objective) {
      std::printf("MISMATCH between serial and parallel sweep row %zu\n", i);
      return 1;
    }
  }
  std::printf("serial and parallel kernels agree\n");
  return 0;
}
