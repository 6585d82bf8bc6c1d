#pragma once

#include <cstdint>
#include <optional>

#include "privtuner/model.hpp"

namespace privtuner::oracle {

// Exhaustive-search specification. Lambda is always enumerated over the
// scenario's option set; each enabled axis is discretized per device with
// points_per_axis values (log-spaced for power, linear otherwise, endpoints
// included, so points' = 2*points - 1 refines any grid into a superset).
// Disabled f/g axes are filled with the smallest deadline-feasible value
// found by bisection on the cost model; disabled p/B fall back to the
// midpoint convention (p_max/2, b_total/N).
struct GridSpec {
  int points_per_axis = 10;
  bool axis_p = true;
  bool axis_b = true;
  bool axis_f = false;
  bool axis_g = false;
};

struct GridResult {
  Allocation allocation;
  double objective = 0.0;
  std::uint64_t scored = 0; // feasible grid points evaluated
};

// Guard on options^N * points^(axes*N); larger searches are refused.
inline constexpr double kMaxGridEvaluations = 1e8;

// Best feasible grid point by total_objective, or nullopt when the grid has
// no feasible point. Parallelized over grid points; identical result to the
// serial reference for any thread count.
std::optional<GridResult> grid_search(const Scenario& scn, const GridSpec& grid);

// Single-threaded reference implementation, kept for differential testing
// and benchmarking.
std::optional<GridResult> grid_search_serial(const Scenario& scn, const GridSpec& grid);

// Benchmark allocators. All three may return allocations that fail
// check_feasibility; construction-impossible cases (a consumed deadline, a
// lambda cap below the first option, an unreachable minimum rate) throw
// InfeasibleError.

// Even split of every resource, smallest lambda.
Allocation average_allocation(const Scenario& scn);

// Midpoint radio allocation, smallest lambda, deadline-exhausting f and g.
Allocation optimize_compute_only(const Scenario& scn);

// Even compute split, smallest lambda, fractional programming for p and B.
Allocation optimize_radio_only(const Scenario& scn, int max_inner = 400, double eps = 1e-6);

}  // namespace privtuner::oracle
