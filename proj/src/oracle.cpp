#include "privtuner/oracle.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "privtuner/stage1.hpp"
#include "privtuner/stage2.hpp"

namespace privtuner::oracle {

namespace {

std::vector<double> linear_axis(double lo, double hi, int points) {
  std::vector<double> v(points);
  for (int k = 0; k < points; ++k)
    v[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(points - 1);
  return v;
}

std::vector<double> log_axis(double lo, double hi, int points) {
  std::vector<double> v(points);
  const double ratio = hi / lo;
  for (int k = 0; k < points; ++k)
    v[k] = lo * std::pow(ratio, static_cast<double>(k) / static_cast<double>(points - 1));
  return v;
}

// Smallest x in (0, cap] with monotone-decreasing time(x) <= budget, found by
// bisection; nullopt when even the cap misses the budget.
template <typename TimeFn>
std::optional<double> min_feasible_frequency(TimeFn&& time_at, double cap, double budget) {
  if (time_at(cap) > budget) return std::nullopt;
  double lo = cap, hi = cap;
  for (int it = 0; it < 200 && time_at(lo) <= budget; ++it) lo *= 0.5;
  if (time_at(lo) <= budget) return lo;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (time_at(mid) <= budget)
      hi = mid;
    else
      lo = mid;
    if (hi - lo <= 1e-13 * hi) break;
  }
  return hi;
}

// One admissible per-device tuple with its objective share and budget usage.
struct Candidate {
  double f = 0.0, g = 0.0, p = 0.0, b = 0.0, lam = 0.0;
  double contribution = 0.0;
};

std::vector<std::vector<Candidate>> build_tables(const Scenario& scn, const GridSpec& grid) {
  const std::size_t n = scn.device_count();
  std::vector<std::vector<Candidate>> tables(n);
  const double tol = kFeasibilityRelTol;

  for (std::size_t i = 0; i < n; ++i) {
    const DeviceProfile& dev = scn.devices[i];
    const std::vector<double> p_vals =
        grid.axis_p ? log_axis(dev.p_max * 1e-4, dev.p_max, grid.points_per_axis)
                    : std::vector<double>{dev.p_max / 2.0};
    const std::vector<double> b_vals =
        grid.axis_b ? linear_axis(scn.b_total * 0.002, scn.b_total, grid.points_per_axis)
                    : std::vector<double>{scn.b_total / static_cast<double>(n)};
    const std::vector<double> f_vals =
        grid.axis_f ? linear_axis(scn.f_total * 0.002, scn.f_total, grid.points_per_axis)
                    : std::vector<double>{};
    const std::vector<double> g_vals =
        grid.axis_g ? linear_axis(dev.g_max * 0.002, dev.g_max, grid.points_per_axis)
                    : std::vector<double>{};

    for (double lam : scn.lambda_options) {
      // server CPU need depends only on lambda
      std::vector<double> f_choices;
      if (grid.axis_f) {
        f_choices = f_vals;
      } else {
        const auto f_min = min_feasible_frequency(
            [&](double f) { return server_costs(scn, i, f, lam).t_cmp; },
            scn.f_total, scn.t_max_server);
        if (!f_min) continue;
        f_choices = {*f_min};
      }
      for (double p : p_vals) {
        for (double b : b_vals) {
          CostBreakdown dc;
          try {
            dc = device_costs(scn, i, dev.g_max, p, b, lam); // g refined below
          } catch (const InfeasibleError&) {
            continue;
          }
          const double window = scn.t_max_device - dc.t_tr;
          if (window <= 0.0) continue;

          // device CPU: grid values or the smallest deadline-feasible one
          std::vector<double> g_choices;
          if (grid.axis_g) {
            g_choices = g_vals;
          } else {
            const auto g_min = min_feasible_frequency(
                [&](double g) { return device_costs(scn, i, g, p, b, lam).t_en; },
                dev.g_max, window);
            if (!g_min) continue;
            g_choices = {*g_min};
          }

          for (double g : g_choices) {
            const CostBreakdown c = device_costs(scn, i, g, p, b, lam);
            if (c.t_en + c.t_tr > scn.t_max_device * (1.0 + tol)) continue;
            for (double f : f_choices) {
              const ServerCosts s = server_costs(scn, i, f, lam);
              if (s.t_cmp > scn.t_max_server * (1.0 + tol)) continue;
              Candidate cand;
              cand.f = f;
              cand.g = g;
              cand.p = p;
              cand.b = b;
              cand.lam = lam;
              cand.contribution = c.e_en + c.e_tr + s.e_cmp -
                                  scn.omega * dev.privacy_weight * c.privacy;
              tables[i].push_back(cand);
            }
          }
        }
      }
    }
  }
  return tables;
}

std::optional<GridResult> run_grid(const Scenario& scn, const GridSpec& grid, bool parallel) {
  scn.validate();
  if (grid.points_per_axis < 2)
    throw std::invalid_argument("grid_search: points_per_axis must be >= 2");

  const std::size_t n = scn.device_count();
  const int active_axes = static_cast<int>(grid.axis_p) + static_cast<int>(grid.axis_b) +
                          static_cast<int>(grid.axis_f) + static_cast<int>(grid.axis_g);
  const double space = std::pow(static_cast<double>(scn.lambda_options.size()),
                                static_cast<double>(n)) *
                       std::pow(static_cast<double>(grid.points_per_axis),
                                static_cast<double>(active_axes) * static_cast<double>(n));
  if (space > kMaxGridEvaluations)
    throw std::invalid_argument("grid_search: search space exceeds the evaluation guard");

  const std::vector<std::vector<Candidate>> tables = build_tables(scn, grid);
  std::uint64_t combos = 1;
  for (const auto& t : tables) {
    if (t.empty()) return std::nullopt;
    combos *= t.size();
  }

  const double f_cap = scn.f_total * (1.0 + kFeasibilityRelTol);
  const double b_cap = scn.b_total * (1.0 + kFeasibilityRelTol);

  double best_value = std::numeric_limits<double>::infinity();
  std::int64_t best_index = -1;
  std::uint64_t scored = 0;

  const std::int64_t total = static_cast<std::int64_t>(combos);
#ifdef _OPENMP
#pragma omp parallel if (parallel)
#endif
  {
    double local_best = std::numeric_limits<double>::infinity();
    std::int64_t local_index = -1;
    std::uint64_t local_scored = 0;
#ifdef _OPENMP
#pragma omp for schedule(static)
#endif
    for (std::int64_t flat = 0; flat < total; ++flat) {
      std::uint64_t rest = static_cast<std::uint64_t>(flat);
      double value = 0.0, f_used = 0.0, b_used = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const auto& t = tables[i];
        const Candidate& c = t[rest % t.size()];
        rest /= t.size();
        value += c.contribution;
        f_used += c.f;
        b_used += c.b;
      }
      if (f_used > f_cap || b_used > b_cap) continue;
      ++local_scored;
      if (value < local_best || (value == local_best && flat < local_index)) {
        local_best = value;
        local_index = flat;
      }
    }
#ifdef _OPENMP
#pragma omp critical
#endif
    {
      scored += local_scored;
      if (local_index >= 0 &&
          (local_best < best_value ||
           (local_best == best_value && (best_index < 0 || local_index < best_index)))) {
        best_value = local_best;
        best_index = local_index;
      }
    }
  }

  if (best_index < 0) return std::nullopt;

  GridResult result;
  result.scored = scored;
  result.allocation = Allocation::zeros(n);
  std::uint64_t rest = static_cast<std::uint64_t>(best_index);
  for (std::size_t i = 0; i < n; ++i) {
    const Candidate& c = tables[i][rest % tables[i].size()];
    rest /= tables[i].size();
    result.allocation.f[i] = c.f;
    result.allocation.g[i] = c.g;
    result.allocation.p[i] = c.p;
    result.allocation.b[i] = c.b;
    result.allocation.lam[i] = c.lam;
  }
  result.objective = total_objective(scn, result.allocation);
  return result;
}

}  // namespace

std::optional<GridResult> grid_search(const Scenario& scn, const GridSpec& grid) {
  return run_grid(scn, grid, true);
}

std::optional<GridResult> grid_search_serial(const Scenario& scn, const GridSpec& grid) {
  return run_grid(scn, grid, false);
}

Allocation average_allocation(const Scenario& scn) {
  const std::size_t n = scn.device_count();
  Allocation a = Allocation::zeros(n);
  for (std::size_t i = 0; i < n; ++i) {
    a.f[i] = scn.f_total / static_cast<double>(n);
    a.g[i] = scn.devices[i].g_max / 2.0;
    a.p[i] = scn.devices[i].p_max / 2.0;
    a.b[i] = scn.b_total / static_cast<double>(n);
    a.lam[i] = scn.lambda_options.front();
  }
  return a;
}

Allocation optimize_compute_only(const Scenario& scn) {
  Allocation a = average_allocation(scn);
  std::vector<double> t_tr(scn.device_count());
  for (std::size_t i = 0; i < t_tr.size(); ++i)
    t_tr[i] = device_costs(scn, i, a.g[i], a.p[i], a.b[i], a.lam[i]).t_tr;
  const stage1::Stage1Context ctx = stage1::make_context(scn, t_tr);
  const stage1::Capacities cap = stage1::recover_capacities(scn, ctx, a.lam);
  a.f = cap.f;
  a.g = cap.g;
  return a;
}

Allocation optimize_radio_only(const Scenario& scn, int max_inner, double eps) {
  Allocation a = average_allocation(scn);
  std::vector<double> t_en(scn.device_count());
  for (std::size_t i = 0; i < t_en.size(); ++i)
    t_en[i] = scn.fit.y1(a.lam[i]) * scn.devices[i].samples *
              scn.devices[i].params_per_sample / a.g[i];
  const stage2::FractionalProgrammingResult fp =
      stage2::fractional_programming(scn, t_en, a.p, a.b, max_inner, eps);
  a.p = fp.p;
  a.b = fp.b;
  return a;
}

}  // namespace privtuner::oracle
