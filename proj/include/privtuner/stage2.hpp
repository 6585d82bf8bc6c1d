#pragma once

#include <cstddef>
#include <vector>

#include "privtuner/model.hpp"

namespace privtuner::stage2 {

// Fixed quantities for one stage-2 solve: encryption times, the minimum
// uplink rates they imply, and the auxiliary variables of the quadratic
// transform.
//
// Two flavors exist. The plain context (make_context) treats encryption
// times as fixed, which is the textbook radio subproblem. The coupled
// context (make_coupled_context) instead prices the encryption energy of the
// deadline-exhausting device CPU into the objective as
// window_coef / (t_max_device - d/r)^2, so the solve may also move the
// time split between encryption and transmission. The joint loop needs the
// coupled form: with encryption times pinned, the alternation can never
// revisit the split chosen by the initial point.
struct Stage2Context {
  std::vector<double> t_en;
  std::vector<double> r_min;
  std::vector<double> z;
  std::vector<double> window_coef; // kappa*(y1 D s)^3; empty = plain radio solve
  double device_deadline = 0.0;

  bool coupled() const { return !window_coef.empty(); }
  std::size_t device_count() const { return t_en.size(); }
};

// Minimum rate that still meets the deadline after encryption. Uses the
// device deadline by default; Scenario::rmin_deadline selects the server
// variant for fidelity runs.
double min_rate(const Scenario& scn, std::size_t i, double t_en_i);

// Quadratic-transform auxiliary variable z = 1/(2 p d r).
double update_auxiliary(const Scenario& scn, std::size_t i, double p, double b);

// Context with r_min filled and joint rate feasibility verified (the
// bandwidths needed at full power must fit the budget); z is left empty.
Stage2Context make_context(const Scenario& scn, const std::vector<double>& t_en);

// Coupled context at a given lambda assignment: encryption times taken at
// the device CPU cap (the loosest feasible split), window energy priced into
// the objective.
Stage2Context make_coupled_context(const Scenario& scn, const std::vector<double>& lam);

// Sum over devices of (p d)^2 z + 1/(4 r^2 z).
double surrogate_objective(const Scenario& scn, const Stage2Context& ctx,
                           const std::vector<double>& p, const std::vector<double>& b);

// Original sum-of-ratios transmission energy, sum of p d / r.
double transmission_energy(const Scenario& scn, const std::vector<double>& p,
                           const std::vector<double>& b);

// Objective the solve actually descends: transmission energy plus, for a
// coupled context, the encryption energy of the deadline-exhausting device
// CPU at each implied transmission time.
double block_objective(const Scenario& scn, const Stage2Context& ctx,
                       const std::vector<double>& p, const std::vector<double>& b);

struct PowerBandwidthSolution {
  std::vector<double> p;
  std::vector<double> b;
  std::vector<double> gamma; // rate-constraint multipliers
  double beta = 0.0;         // bandwidth-budget multiplier
};

// Global solution of the convex surrogate problem at fixed z: power and
// bandwidth stationarity roots per device, rate multipliers by bisection,
// and an outer bisection on the bandwidth multiplier until the budget is
// exactly spent.
PowerBandwidthSolution solve_power_bandwidth(const Scenario& scn, const Stage2Context& ctx,
                                             const PowerBandwidthSolution* warm = nullptr);

struct FractionalProgrammingResult {
  std::vector<double> p;
  std::vector<double> b;
  std::vector<double> gamma;
  double beta = 0.0;
  std::vector<double> z; // auxiliary variables the returned solve ran at
  std::vector<double> objective_trace; // block objective, initial point first
  int iterations = 0;
  bool converged = false;
};

// Alternates the surrogate solve with the auxiliary update until the z
// vector settles (relative max-norm <= eps) or max_iter rounds pass.
FractionalProgrammingResult fractional_programming(const Scenario& scn,
                                                   const std::vector<double>& t_en,
                                                   const std::vector<double>& init_p,
                                                   const std::vector<double>& init_b,
                                                   int max_iter, double eps);

// Same loop on a prepared context (plain or coupled).
FractionalProgrammingResult fractional_programming(const Scenario& scn, Stage2Context ctx,
                                                   const std::vector<double>& init_p,
                                                   const std::vector<double>& init_b,
                                                   int max_iter, double eps);

}  // namespace privtuner::stage2
