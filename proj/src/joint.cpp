#include "privtuner/joint.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "privtuner/stage1.hpp"
#include "privtuner/stage2.hpp"

namespace privtuner::joint {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double relative_change(double prev, double cur) {
  return std::fabs(cur - prev) / std::max(std::fabs(prev), 1.0);
}

std::vector<double> transmission_times(const Scenario& scn, const Allocation& alloc) {
  std::vector<double> t_tr(scn.device_count());
  for (std::size_t i = 0; i < t_tr.size(); ++i) {
    const double r = shannon_rate(alloc.b[i], alloc.p[i], scn.devices[i].channel_gain,
                                  scn.noise_density);
    if (r <= 0.0)
      throw InfeasibleError("device " + std::to_string(i) + ": zero uplink rate");
    t_tr[i] = scn.devices[i].tx_data_bits / r;
  }
  return t_tr;
}

}  // namespace

void SolveOptions::validate() const {
  if (max_outer < 1) throw std::invalid_argument("solve options: max_outer must be >= 1");
  if (max_inner < 1) throw std::invalid_argument("solve options: max_inner must be >= 1");
  if (!(eps > 0.0 && eps < 1.0))
    throw std::invalid_argument("solve options: eps must lie in (0, 1)");
}

double convergence_metric(const Allocation& prev, const Allocation& cur) {
  const std::size_t n = prev.device_count();
  if (cur.device_count() != n)
    throw std::invalid_argument("convergence_metric: allocation size mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    m = std::max(m, relative_change(prev.f[i], cur.f[i]));
    m = std::max(m, relative_change(prev.g[i], cur.g[i]));
    m = std::max(m, relative_change(prev.p[i], cur.p[i]));
    m = std::max(m, relative_change(prev.b[i], cur.b[i]));
    m = std::max(m, relative_change(prev.lam[i], cur.lam[i]));
  }
  return m;
}

SolveResult solve(const Scenario& scn, const SolveOptions& opts) {
  scn.validate();
  opts.validate();
  const std::size_t n = scn.device_count();

  Allocation alloc = Allocation::zeros(n);
  for (std::size_t i = 0; i < n; ++i) {
    alloc.p[i] = scn.devices[i].p_max / 2.0;
    alloc.b[i] = scn.b_total / static_cast<double>(n);
    alloc.lam[i] = scn.lambda_options.front();
    alloc.g[i] = scn.devices[i].g_max / 2.0;
    alloc.f[i] = scn.f_total / static_cast<double>(n);
  }

  // The midpoint radio split can violate a weak device's deadline even when
  // the scenario is solvable (it just needs an uneven bandwidth split). In
  // that case bootstrap the radio variables from a coupled stage-2 solve at
  // the smallest degree, which needs no prior iterate; a genuinely
  // unservable device still surfaces as InfeasibleError there.
  {
    bool init_ok = true;
    for (std::size_t i = 0; i < n && init_ok; ++i) {
      const double r = shannon_rate(alloc.b[i], alloc.p[i], scn.devices[i].channel_gain,
                                    scn.noise_density);
      init_ok = r > 0.0 && scn.devices[i].tx_data_bits / r < scn.t_max_device;
    }
    if (!init_ok) {
      const stage2::FractionalProgrammingResult boot = stage2::fractional_programming(
          scn, stage2::make_coupled_context(scn, alloc.lam), alloc.p, alloc.b,
          opts.max_inner, opts.eps);
      alloc.p = boot.p;
      alloc.b = boot.b;
    }
  }

  SolveResult result;
  double best_objective = std::numeric_limits<double>::infinity();
  Allocation prev = alloc;

  for (int outer = 1; outer <= opts.max_outer; ++outer) {
    IterationStats stats;
    const auto t0 = std::chrono::steady_clock::now();

    // Stage 1: lambda, f, g at the current radio allocation
    const std::vector<double> t_tr = transmission_times(scn, alloc);
    const stage1::Stage1Solution s1 = stage1::solve(scn, t_tr);
    alloc.lam = s1.lam;
    alloc.f = s1.f;
    alloc.g = s1.g;
    stats.stage1_seconds = seconds_since(t0);

    // Stage 2: p, B at the new compute allocation, warm-started from the
    // incumbent radio point (which stays feasible by construction). The
    // coupled context prices the encryption window into the radio objective
    // so the time split is not frozen at the initial point.
    const auto t1 = std::chrono::steady_clock::now();
    const stage2::FractionalProgrammingResult s2 = stage2::fractional_programming(
        scn, stage2::make_coupled_context(scn, alloc.lam), alloc.p, alloc.b,
        opts.max_inner, opts.eps);
    alloc.p = s2.p;
    alloc.b = s2.b;
    // the device CPU re-exhausts the deadline at the new transmission times;
    // rate-tolerance dust may leave the implied g a hair over the cap when
    // the window constraint binds, so snap it back
    const std::vector<double> t_tr_new = transmission_times(scn, alloc);
    for (std::size_t i = 0; i < n; ++i) {
      double g = scn.fit.y1(alloc.lam[i]) * scn.devices[i].samples *
                 scn.devices[i].params_per_sample / (scn.t_max_device - t_tr_new[i]);
      const double cap = scn.devices[i].g_max;
      if (g > cap && g <= cap * (1.0 + 1e-6)) g = cap;
      alloc.g[i] = g;
    }
    stats.stage2_seconds = seconds_since(t1);

    stats.objective = total_objective(scn, alloc);
    stats.energy = total_energy(scn, alloc);
    stats.privacy = total_privacy(scn, alloc);
    stats.allocation = alloc;

    if (stats.objective > best_objective) {
      // inside solver tolerance of an alternation fixed point
      result.trace.converged = true;
      break;
    }
    best_objective = stats.objective;
    result.trace.iterations.push_back(std::move(stats));

    if (convergence_metric(prev, alloc) <= opts.eps) {
      result.trace.converged = true;
      break;
    }
    prev = alloc;
  }

  if (result.trace.iterations.empty())
    throw InfeasibleError("joint: no iterate produced");
  result.allocation = result.trace.iterations.back().allocation;
  result.objective = result.trace.iterations.back().objective;
  return result;
}

}  // namespace privtuner::joint
