#include "privtuner/stage1.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <string>

#include "privtuner/rootfind.hpp"

namespace privtuner::stage1 {

namespace {

// Per-device constants of the reduced objective
//   phi(l) = enc_coef * y1(l)^3 + srv_coef * (c_up + y2(l))^3 - omega*sigma*y5(l)
// with y2(l) = a2 * l + y2_const.
struct DeviceTerms {
  double enc_coef = 0.0;
  double srv_coef = 0.0;
  double a2 = 0.0;        // dy2/dl
  double y2_const = 0.0;
  double c_up = 0.0;      // adapter update cycles
  double f_bar_per_y2 = 0.0; // D / t_max_server
  double privacy_weight = 0.0;
};

DeviceTerms device_terms(const Scenario& scn, std::size_t i, double t_tr_i) {
  const DeviceProfile& dev = scn.devices[i];
  const double d3 = dev.samples * dev.samples * dev.samples;
  const double s3 = dev.params_per_sample * dev.params_per_sample * dev.params_per_sample;
  const double device_window = scn.t_max_device - t_tr_i;

  DeviceTerms t;
  t.enc_coef = scn.kappa * d3 * s3 / (device_window * device_window);
  t.srv_coef = scn.kappa * d3 / (scn.t_max_server * scn.t_max_server);
  t.a2 = scn.fit.c3 * dev.additions_per_sample + scn.fit.c5 * dev.multiplications_per_sample;
  t.y2_const = scn.fit.c4 * dev.additions_per_sample +
               scn.fit.c6 * dev.multiplications_per_sample + dev.other_cycles;
  t.c_up = dev.adapter_update_cycles;
  t.f_bar_per_y2 = dev.samples / scn.t_max_server;
  t.privacy_weight = dev.privacy_weight;
  return t;
}

double objective_term(const Scenario& scn, const DeviceTerms& t, double lam) {
  const double y1 = scn.fit.y1(lam);
  const double y2c = t.a2 * lam + t.y2_const + t.c_up;
  return t.enc_coef * y1 * y1 * y1 + t.srv_coef * y2c * y2c * y2c -
         scn.omega * t.privacy_weight * scn.fit.y5(lam);
}

// d/dl of objective_term plus alpha * d f_bar/dl
double lagrangian_slope(const Scenario& scn, const DeviceTerms& t, double lam, double alpha) {
  const double y1 = scn.fit.y1(lam);
  const double y2c = t.a2 * lam + t.y2_const + t.c_up;
  return 3.0 * t.enc_coef * y1 * y1 * scn.fit.y1_prime(lam) +
         3.0 * t.srv_coef * y2c * y2c * t.a2 -
         scn.omega * t.privacy_weight * scn.fit.c7 + alpha * t.a2 * t.f_bar_per_y2;
}

double f_bar_of(const DeviceTerms& t, double lam) {
  return (t.a2 * lam + t.y2_const + t.c_up) * t.f_bar_per_y2;
}

double clamped_root(const Scenario& scn, const DeviceTerms& t, double lo, double hi,
                    double alpha) {
  const double slo = lagrangian_slope(scn, t, lo, alpha);
  if (slo >= 0.0) return lo;
  const double shi = lagrangian_slope(scn, t, hi, alpha);
  if (shi <= 0.0) return hi;
  return brent_root([&](double l) { return lagrangian_slope(scn, t, l, alpha); },
                    lo, hi, slo, shi, 1e-13);
}

double nearest_option(const std::vector<double>& options, double x) {
  double best = options.front();
  for (double o : options)
    if (std::fabs(o - x) < std::fabs(best - x)) best = o;
  return best;
}

// Largest option <= x; options are ascending and x >= options.front().
double floor_option(const std::vector<double>& options, double x) {
  double best = options.front();
  for (double o : options)
    if (o <= x) best = o;
  return best;
}

// Smallest option >= x, or +inf when none.
double ceil_option(const std::vector<double>& options, double x) {
  for (double o : options)
    if (o >= x) return o;
  return std::numeric_limits<double>::infinity();
}

}  // namespace

ReducedFrequencies reduced_frequencies(const Scenario& scn, std::size_t i,
                                       double lam, double t_tr_i) {
  const DeviceProfile& dev = scn.devices.at(i);
  const double window = scn.t_max_device - t_tr_i;
  if (window <= 0.0)
    throw InfeasibleError("device " + std::to_string(i) +
                          ": transmission already exceeds the device deadline");
  ReducedFrequencies r;
  r.g_bar = scn.fit.y1(lam) * dev.samples * dev.params_per_sample / window;
  r.f_bar = (prediction_cycles(scn.fit, lam, dev) + dev.adapter_update_cycles) *
            dev.samples / scn.t_max_server;
  return r;
}

double lambda_upper_bound(const Scenario& scn, std::size_t i, double t_tr_i) {
  const DeviceProfile& dev = scn.devices.at(i);
  const double window = scn.t_max_device - t_tr_i;
  if (window <= 0.0)
    throw InfeasibleError("device " + std::to_string(i) +
                          ": transmission already exceeds the device deadline");
  const double lam_max =
      std::sqrt(window * dev.g_max / (scn.fit.c1 * dev.samples * dev.params_per_sample)) -
      scn.fit.c2;
  if (lam_max < scn.lambda_options.front())
    throw InfeasibleError("device " + std::to_string(i) +
                          ": no lambda option fits the device CPU cap");
  return lam_max;
}

Stage1Context make_context(const Scenario& scn, const std::vector<double>& t_tr) {
  if (t_tr.size() != scn.device_count())
    throw std::invalid_argument("stage1: t_tr size mismatch");
  Stage1Context ctx;
  ctx.t_tr = t_tr;
  ctx.lo.resize(t_tr.size());
  ctx.hi.resize(t_tr.size());
  for (std::size_t i = 0; i < t_tr.size(); ++i) {
    ctx.lo[i] = scn.lambda_options.front();
    ctx.hi[i] = std::min(scn.lambda_options.back(), lambda_upper_bound(scn, i, t_tr[i]));
  }
  return ctx;
}

double p2_objective(const Scenario& scn, const Stage1Context& ctx,
                    const std::vector<double>& lam) {
  double total = 0.0;
  for (std::size_t i = 0; i < ctx.device_count(); ++i)
    total += objective_term(scn, device_terms(scn, i, ctx.t_tr[i]), lam[i]);
  return total;
}

double server_capacity_used(const Scenario& scn, const Stage1Context& ctx,
                            const std::vector<double>& lam) {
  double used = 0.0;
  for (std::size_t i = 0; i < ctx.device_count(); ++i)
    used += f_bar_of(device_terms(scn, i, ctx.t_tr[i]), lam[i]);
  return used;
}

double stationarity_root(const Scenario& scn, const Stage1Context& ctx,
                         std::size_t i, double alpha) {
  return clamped_root(scn, device_terms(scn, i, ctx.t_tr[i]), ctx.lo[i], ctx.hi[i], alpha);
}

RelaxedSolution solve_relaxed(const Scenario& scn, const Stage1Context& ctx) {
  const std::size_t n = ctx.device_count();
  std::vector<DeviceTerms> terms(n);
  for (std::size_t i = 0; i < n; ++i) terms[i] = device_terms(scn, i, ctx.t_tr[i]);

  auto lambdas_at = [&](double alpha) {
    std::vector<double> lam(n);
    for (std::size_t i = 0; i < n; ++i)
      lam[i] = clamped_root(scn, terms[i], ctx.lo[i], ctx.hi[i], alpha);
    return lam;
  };
  auto capacity_used = [&](const std::vector<double>& lam) {
    double used = 0.0;
    for (std::size_t i = 0; i < n; ++i) used += f_bar_of(terms[i], lam[i]);
    return used;
  };

  const double budget_tol = kServerBudgetRelTol * scn.f_total;

  RelaxedSolution sol;
  const std::vector<double> lam0 = lambdas_at(0.0);
  if (capacity_used(lam0) <= scn.f_total + budget_tol) {
    sol.lam = lam0;
    sol.alpha = 0.0;
    sol.objective = p2_objective(scn, ctx, sol.lam);
    return sol;
  }

  // The lower-bound corner is the cheapest in server capacity; if even that
  // does not fit, the box holds no feasible point.
  if (capacity_used(ctx.lo) > scn.f_total + budget_tol)
    throw InfeasibleError("stage1: server CPU budget too small for this lambda box");

  double alpha_lo = 0.0;
  double alpha_hi = 1.0;
  int guard = 0;
  while (capacity_used(lambdas_at(alpha_hi)) > scn.f_total && ++guard < 200) {
    alpha_lo = alpha_hi;
    alpha_hi *= 2.0;
  }

  std::vector<double> lam = lambdas_at(alpha_hi);
  double alpha = alpha_hi;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (alpha_lo + alpha_hi);
    const std::vector<double> lam_mid = lambdas_at(mid);
    const double residual = capacity_used(lam_mid) - scn.f_total;
    if (std::fabs(residual) <= budget_tol) {
      lam = lam_mid;
      alpha = mid;
      break;
    }
    if (residual > 0.0)
      alpha_lo = mid;
    else {
      alpha_hi = mid;
      lam = lam_mid;
      alpha = mid;
    }
    if (alpha_hi - alpha_lo <= 1e-14 * std::max(1.0, alpha_hi)) break;
  }

  sol.lam.resize(n);
  for (std::size_t i = 0; i < n; ++i) sol.lam[i] = std::min(lam0[i], lam[i]);
  sol.alpha = alpha;
  sol.objective = p2_objective(scn, ctx, sol.lam);
  return sol;
}

BnbResult branch_and_bound(const Scenario& scn, const Stage1Context& root_ctx) {
  const std::size_t n = root_ctx.device_count();
  const std::vector<double>& options = scn.lambda_options;
  const double snap_tol = kLambdaSnapRelTol * options.front();
  const double budget_tol = kServerBudgetRelTol * scn.f_total;

  // best-first: smallest bound first; ties resolved deeper-first then by
  // branched coordinate and creation order so runs are reproducible
  auto worse = [](const BnbNode& a, const BnbNode& b) {
    if (a.lower_bound != b.lower_bound) return a.lower_bound > b.lower_bound;
    if (a.depth != b.depth) return a.depth < b.depth;
    if (a.branch_var != b.branch_var) return a.branch_var > b.branch_var;
    return a.seq > b.seq;
  };
  std::priority_queue<BnbNode, std::vector<BnbNode>, decltype(worse)> open(worse);

  BnbResult result;
  double incumbent = std::numeric_limits<double>::infinity();
  std::vector<double> incumbent_lam;
  std::uint64_t next_seq = 0;

  auto relax_and_push = [&](std::vector<double> lo, std::vector<double> hi,
                            int depth, int branch_var) {
    Stage1Context ctx;
    ctx.t_tr = root_ctx.t_tr;
    ctx.lo = std::move(lo);
    ctx.hi = std::move(hi);
    BnbNode node;
    try {
      RelaxedSolution rel = solve_relaxed(scn, ctx);
      node.relaxed_solution = std::move(rel.lam);
      node.lower_bound = rel.objective;
    } catch (const InfeasibleError&) {
      return; // fathomed: empty feasible set
    }
    node.lo = std::move(ctx.lo);
    node.hi = std::move(ctx.hi);
    node.depth = depth;
    node.branch_var = branch_var;
    node.seq = next_seq++;
    open.push(std::move(node));
  };

  relax_and_push(root_ctx.lo, root_ctx.hi, 0, -1);

  while (!open.empty()) {
    BnbNode node = open.top();
    open.pop();
    ++result.nodes_explored;

    // bound test with a dust guard so equal-valued optima are still explored
    if (node.lower_bound > incumbent + 1e-12 * (1.0 + std::fabs(incumbent))) continue;

    // integrality: every coordinate close to an option that the node admits
    bool integral = true;
    std::vector<double> snapped(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double opt = nearest_option(options, node.relaxed_solution[i]);
      snapped[i] = opt;
      integral = integral && std::fabs(opt - node.relaxed_solution[i]) <= snap_tol &&
                 opt >= node.lo[i] && opt <= node.hi[i];
    }

    int branch_idx = -1;
    if (integral) {
      Stage1Context node_ctx{root_ctx.t_tr, node.lo, node.hi};
      if (server_capacity_used(scn, node_ctx, snapped) <= scn.f_total + budget_tol) {
        const double obj = p2_objective(scn, node_ctx, snapped);
        if (obj < incumbent) {
          incumbent = obj;
          incumbent_lam = snapped;
          result.incumbent_trace.push_back(obj);
        }
        continue; // solved at this node
      }
      // The snap moved some coordinate up across the budget boundary; split
      // below/at that option instead of accepting the candidate.
      double worst_up = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double up = snapped[i] - node.relaxed_solution[i];
        if (up > worst_up) {
          worst_up = up;
          branch_idx = static_cast<int>(i);
        }
      }
      if (branch_idx < 0) continue; // nothing snapped upward: genuinely infeasible
    } else {
      // most fractional coordinate: distance to the nearest option,
      // normalized by the gap it falls in
      double best_frac = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double x = node.relaxed_solution[i];
        const double opt = nearest_option(options, x);
        if (std::fabs(opt - x) <= snap_tol && opt >= node.lo[i] && opt <= node.hi[i])
          continue;
        const double lo_opt = floor_option(options, x);
        const double hi_opt = ceil_option(options, x);
        double frac;
        if (!std::isfinite(hi_opt) || hi_opt == lo_opt) {
          frac = std::fabs(x - opt) / options.front();
        } else {
          frac = std::min(x - lo_opt, hi_opt - x) / (hi_opt - lo_opt);
        }
        if (frac > best_frac) {
          best_frac = frac;
          branch_idx = static_cast<int>(i);
        }
      }
      if (branch_idx < 0) continue; // defensive: no branchable coordinate
    }

    const std::size_t k = static_cast<std::size_t>(branch_idx);
    const double x = node.relaxed_solution[k];
    const double down = floor_option(options, std::min(x, node.hi[k]));
    const double up = ceil_option(options, std::max(x, node.lo[k]));

    if (down >= node.lo[k]) {
      std::vector<double> lo = node.lo, hi = node.hi;
      hi[k] = down;
      // skip degenerate re-split: the child must shrink the lattice
      if (hi[k] < node.hi[k])
        relax_and_push(std::move(lo), std::move(hi), node.depth + 1, branch_idx);
    }
    if (std::isfinite(up) && up <= node.hi[k]) {
      std::vector<double> lo = node.lo, hi = node.hi;
      lo[k] = up;
      if (lo[k] > node.lo[k])
        relax_and_push(std::move(lo), std::move(hi), node.depth + 1, branch_idx);
    }
  }

  if (!std::isfinite(incumbent))
    throw InfeasibleError("stage1: no feasible lambda assignment (server budget)");

  result.lam = std::move(incumbent_lam);
  result.objective = incumbent;
  return result;
}

Capacities recover_capacities(const Scenario& scn, const Stage1Context& ctx,
                              const std::vector<double>& lam) {
  Capacities cap;
  cap.f.resize(lam.size());
  cap.g.resize(lam.size());
  for (std::size_t i = 0; i < lam.size(); ++i) {
    const ReducedFrequencies r = reduced_frequencies(scn, i, lam[i], ctx.t_tr[i]);
    cap.f[i] = r.f_bar;
    cap.g[i] = r.g_bar;
  }
  return cap;
}

Stage1Solution solve(const Scenario& scn, const std::vector<double>& t_tr) {
  const Stage1Context ctx = make_context(scn, t_tr);
  BnbResult bnb = branch_and_bound(scn, ctx);
  Capacities cap = recover_capacities(scn, ctx, bnb.lam);
  Stage1Solution sol;
  sol.lam = std::move(bnb.lam);
  sol.f = std::move(cap.f);
  sol.g = std::move(cap.g);
  sol.objective = bnb.objective;
  sol.nodes_explored = bnb.nodes_explored;
  return sol;
}

}  // namespace privtuner::stage1
