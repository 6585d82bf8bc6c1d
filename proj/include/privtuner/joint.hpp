#pragma once

#include <cstdint>
#include <vector>

#include "privtuner/model.hpp"

namespace privtuner::joint {

struct SolveOptions {
  int max_outer = 20;    // alternation rounds
  int max_inner = 400;   // fractional-programming rounds per stage-2 call
  double eps = 1e-6;     // relative max-norm convergence threshold
  std::uint64_t seed = 0; // recorded for provenance; the solver itself is deterministic

  void validate() const;
};

struct IterationStats {
  double objective = 0.0;
  double energy = 0.0;
  double privacy = 0.0;
  Allocation allocation;
  double stage1_seconds = 0.0;
  double stage2_seconds = 0.0;
};

struct SolveTrace {
  std::vector<IterationStats> iterations;
  bool converged = false;
};

struct SolveResult {
  Allocation allocation;
  SolveTrace trace;
  double objective = 0.0;
};

// Relative max-norm change between two allocations over every variable.
double convergence_metric(const Allocation& prev, const Allocation& cur);

// Alternating solve: lambda/f/g by branch and bound given the radio
// variables, then p/B by fractional programming given the compute variables,
// until the allocation settles or max_outer rounds pass. Starts from
// (p_max/2, b_total/N, smallest lambda option).
SolveResult solve(const Scenario& scn, const SolveOptions& opts);

}  // namespace privtuner::joint
