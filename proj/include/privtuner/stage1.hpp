#pragma once

#include <cstddef>
#include <vector>

#include "privtuner/model.hpp"

namespace privtuner::stage1 {

// Fixed quantities for one stage-1 solve: transmission times from the current
// (p, B), and the continuous lambda interval each device may use. The upper
// bound is min(largest option, lambda cap from the device CPU limit).
struct Stage1Context {
  std::vector<double> t_tr;
  std::vector<double> lo; // per-device lower lambda bound
  std::vector<double> hi; // per-device upper lambda bound

  std::size_t device_count() const { return t_tr.size(); }
};

// Frequencies that exactly exhaust the two deadlines at a given lambda:
//   g_bar: device CPU so that encryption fills t_max_device - t_tr
//   f_bar: server CPU so that prediction + update fills t_max_server
struct ReducedFrequencies {
  double f_bar = 0.0;
  double g_bar = 0.0;
};
ReducedFrequencies reduced_frequencies(const Scenario& scn, std::size_t i,
                                       double lam, double t_tr_i);

// Largest continuous lambda compatible with the device CPU cap given the
// remaining deadline; throws InfeasibleError when it falls below the first
// option.
double lambda_upper_bound(const Scenario& scn, std::size_t i, double t_tr_i);

// Builds the root context from fixed transmission times. Throws
// InfeasibleError when some device deadline is already consumed or no
// lambda option fits its CPU cap.
Stage1Context make_context(const Scenario& scn, const std::vector<double>& t_tr);

// Computation-energy-minus-privacy objective with f, g eliminated through
// reduced_frequencies. Defined for continuous lambda.
double p2_objective(const Scenario& scn, const Stage1Context& ctx,
                    const std::vector<double>& lam);

// Server capacity used at a lambda vector, sum of f_bar over devices.
double server_capacity_used(const Scenario& scn, const Stage1Context& ctx,
                            const std::vector<double>& lam);

// Minimizer of the per-device Lagrangian term (objective + alpha * f_bar)
// over ctx's interval; monotone root of the derivative, clamped at the ends.
double stationarity_root(const Scenario& scn, const Stage1Context& ctx,
                         std::size_t i, double alpha);

struct RelaxedSolution {
  std::vector<double> lam;
  double alpha = 0.0;
  double objective = 0.0;
};

// KKT solution of the continuous relaxation over ctx's box: alpha = 0 when
// the server budget is slack, otherwise bisected until sum f_bar = f_total.
// Throws InfeasibleError when even the lower-bound corner exceeds f_total.
RelaxedSolution solve_relaxed(const Scenario& scn, const Stage1Context& ctx);

struct BnbNode {
  std::vector<double> lo;
  std::vector<double> hi;
  std::vector<double> relaxed_solution;
  double lower_bound = 0.0;
  int depth = 0;
  int branch_var = -1;
  std::uint64_t seq = 0;
};

struct BnbResult {
  std::vector<double> lam;  // option values, one per device
  double objective = 0.0;
  int nodes_explored = 0;
  std::vector<double> incumbent_trace; // objective after each incumbent update
};

// Relative tolerance on sum f_bar <= f_total shared by the solver and any
// enumeration used to cross-check it.
inline constexpr double kServerBudgetRelTol = 1e-8;

// Best-first branch and bound over the lambda option lattice.
BnbResult branch_and_bound(const Scenario& scn, const Stage1Context& ctx);

struct Capacities {
  std::vector<double> f;
  std::vector<double> g;
};

// f*, g* recovered from the chosen lambdas by deadline exhaustion.
Capacities recover_capacities(const Scenario& scn, const Stage1Context& ctx,
                              const std::vector<double>& lam);

struct Stage1Solution {
  std::vector<double> lam;
  std::vector<double> f;
  std::vector<double> g;
  double objective = 0.0;
  int nodes_explored = 0;
};

// Full stage-1 solve from fixed transmission times.
Stage1Solution solve(const Scenario& scn, const std::vector<double>& t_tr);

}  // namespace privtuner::stage1
