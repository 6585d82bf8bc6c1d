#include "privtuner/stage2.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "privtuner/rootfind.hpp"

namespace privtuner::stage2 {

namespace {

constexpr double kLn2 = 0.6931471805599453;
constexpr double kBudgetRelTol = 1e-10;  // bandwidth bisection target
constexpr double kRateRelTol = 1e-9;     // gamma bisection target on r = r_min
constexpr double kRootRelTol = 1e-12;    // stationarity roots

struct DeviceRadio {
  double d = 0.0;     // bits to send
  double h = 0.0;     // channel gain
  double p_max = 0.0;
  double n0 = 0.0;
  double z = 0.0;
  double r_min = 0.0;
  double wc = 0.0;    // window energy coefficient; 0 for the plain radio solve
  double t_cap = 0.0; // device deadline backing the window term
};

// Bisect until both bracket values are finite, then polish with Brent.
// Root-finding here can meet +-inf at a bracket end (rate weight at r -> 0,
// window slope past the deadline), which Brent's interpolation cannot take.
template <typename F>
double finite_bracket_root(F&& f, double lo, double hi, double flo, double fhi,
                           double xtol_rel) {
  for (int it = 0; it < 400 && (!std::isfinite(flo) || !std::isfinite(fhi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) return mid;
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm > 0.0) == (fhi > 0.0)) {
      hi = mid;
      fhi = fm;
    } else {
      lo = mid;
      flo = fm;
    }
  }
  if (!std::isfinite(flo) || !std::isfinite(fhi)) return 0.5 * (lo + hi);
  return brent_root(f, lo, hi, flo, fhi, xtol_rel);
}

double rate_of(const DeviceRadio& dev, double p, double b) {
  const double snr = p * dev.h / (dev.n0 * b);
  if (!std::isfinite(snr)) return b * (std::log(p * dev.h / dev.n0) - std::log(b)) / kLn2;
  return b * std::log1p(snr) / kLn2;
}

double drate_dp(const DeviceRadio& dev, double p, double b) {
  const double snr = p * dev.h / (dev.n0 * b);
  return dev.h / (dev.n0 * kLn2 * (1.0 + snr));
}

double drate_db(const DeviceRadio& dev, double p, double b) {
  const double snr = p * dev.h / (dev.n0 * b);
  if (!std::isfinite(snr)) return (std::log(p * dev.h / dev.n0) - std::log(b) - 1.0) / kLn2;
  return (std::log1p(snr) - snr / (1.0 + snr)) / kLn2;
}

// 1/(2 r^3 z), the weight the surrogate puts on the rate at this point
double rate_weight(const DeviceRadio& dev, double r) {
  return 1.0 / (2.0 * r * r * r * dev.z);
}

// -dW/dr of the window energy W(r) = wc / (t_cap - d/r)^2; zero for the
// plain solve, +inf when the rate cannot even cover the deadline.
double window_slope(const DeviceRadio& dev, double r) {
  if (dev.wc == 0.0) return 0.0;
  const double window = dev.t_cap - dev.d / r;
  if (window <= 0.0) return std::numeric_limits<double>::infinity();
  return 2.0 * dev.wc * dev.d / (window * window * window * r * r);
}

// Power stationarity residual: increasing in p, negative below the root.
double power_residual(const DeviceRadio& dev, double p, double b, double gamma) {
  const double r = rate_of(dev, p, b);
  const double drive =
      (rate_weight(dev, r) + gamma + window_slope(dev, r)) * drate_dp(dev, p, b);
  const double push = 2.0 * p * dev.d * dev.d * dev.z;
  if (std::isinf(drive)) return -std::numeric_limits<double>::infinity();
  return push - drive;
}

// Optimal power at fixed bandwidth and rate multiplier, capped at p_max.
double power_root(const DeviceRadio& dev, double b, double gamma) {
  if (power_residual(dev, dev.p_max, b, gamma) <= 0.0) return dev.p_max;
  double hi = dev.p_max, fhi = power_residual(dev, hi, b, gamma);
  double lo = hi, flo = fhi;
  for (int it = 0; it < 1200 && flo > 0.0; ++it) {
    lo *= 0.5;
    flo = power_residual(dev, lo, b, gamma);
  }
  if (flo > 0.0) return lo; // power effectively zero
  return finite_bracket_root([&](double p) { return power_residual(dev, p, b, gamma); },
                             lo, hi, flo, fhi, kRootRelTol);
}

// Marginal value of bandwidth at the per-device optimum; decreasing in b.
double bandwidth_value(const DeviceRadio& dev, double b, double gamma) {
  const double p = power_root(dev, b, gamma);
  const double r = rate_of(dev, p, b);
  const double w = rate_weight(dev, r) + gamma + window_slope(dev, r);
  const double slope = drate_db(dev, p, b);
  if (slope <= 0.0) return 0.0;
  if (std::isinf(w)) return std::numeric_limits<double>::infinity();
  return w * slope;
}

// Bandwidth stationarity: solve bandwidth_value(b) = beta. The hint seeds the
// bracket expansion; any positive value works.
double bandwidth_root(const DeviceRadio& dev, double beta, double gamma, double hint) {
  double lo = hint, hi = hint;
  double flo = bandwidth_value(dev, lo, gamma) - beta;
  double fhi = flo;
  int guard = 0;
  while (fhi > 0.0 && ++guard < 2200) { // value too high: root is to the right
    hi *= 2.0;
    fhi = bandwidth_value(dev, hi, gamma) - beta;
  }
  guard = 0;
  while (flo < 0.0 && ++guard < 2200) {
    lo *= 0.5;
    flo = bandwidth_value(dev, lo, gamma) - beta;
  }
  if (flo < 0.0) return lo;
  if (fhi > 0.0) return hi;
  return finite_bracket_root([&](double b) { return bandwidth_value(dev, b, gamma) - beta; },
                             lo, hi, flo, fhi, 1e-11);
}

struct DevicePoint {
  double p = 0.0;
  double b = 0.0;
  double gamma = 0.0;
};

// Per-device KKT point at a given bandwidth price: gamma = 0 when the free
// optimum already meets r_min, otherwise gamma > 0 chosen so r = r_min.
DevicePoint device_point(const DeviceRadio& dev, double beta, double b_hint,
                         double gamma_hint) {
  DevicePoint pt;
  pt.b = bandwidth_root(dev, beta, 0.0, b_hint);
  pt.p = power_root(dev, pt.b, 0.0);
  const double r0 = rate_of(dev, pt.p, pt.b);
  if (r0 >= dev.r_min) return pt;

  auto rate_gap = [&](double gamma) {
    const double b = bandwidth_root(dev, beta, gamma, b_hint);
    const double p = power_root(dev, b, gamma);
    return rate_of(dev, p, b) - dev.r_min;
  };

  double g_hi = gamma_hint > 0.0 ? gamma_hint : rate_weight(dev, dev.r_min);
  if (!(g_hi > 0.0) || !std::isfinite(g_hi)) g_hi = 1.0;
  double f_hi = rate_gap(g_hi);
  double g_lo = 0.0, f_lo = r0 - dev.r_min;
  int guard = 0;
  while (f_hi < 0.0 && ++guard < 400) {
    g_lo = g_hi;
    f_lo = f_hi;
    g_hi *= 2.0;
    f_hi = rate_gap(g_hi);
  }
  if (f_hi < 0.0)
    throw InfeasibleError("stage2: minimum rate unreachable at the power cap");

  pt.gamma = brent_root(rate_gap, g_lo, g_hi, f_lo, f_hi, 1e-11,
                        0.0, 200);
  pt.b = bandwidth_root(dev, beta, pt.gamma, b_hint);
  pt.p = power_root(dev, pt.b, pt.gamma);
  // land exactly on the constraint boundary side that is feasible
  if (rate_of(dev, pt.p, pt.b) < dev.r_min * (1.0 - 10.0 * kRateRelTol)) {
    pt.gamma *= 1.0 + 1e-9;
    pt.b = bandwidth_root(dev, beta, pt.gamma, b_hint);
    pt.p = power_root(dev, pt.b, pt.gamma);
  }
  return pt;
}

std::vector<DeviceRadio> radio_table(const Scenario& scn, const Stage2Context& ctx) {
  std::vector<DeviceRadio> radios(scn.device_count());
  for (std::size_t i = 0; i < radios.size(); ++i) {
    radios[i].d = scn.devices[i].tx_data_bits;
    radios[i].h = scn.devices[i].channel_gain;
    radios[i].p_max = scn.devices[i].p_max;
    radios[i].n0 = scn.noise_density;
    radios[i].z = ctx.z.empty() ? 0.0 : ctx.z[i];
    radios[i].r_min = ctx.r_min[i];
    radios[i].wc = ctx.coupled() ? ctx.window_coef[i] : 0.0;
    radios[i].t_cap = ctx.device_deadline;
  }
  return radios;
}

}  // namespace

double min_rate(const Scenario& scn, std::size_t i, double t_en_i) {
  const double deadline = scn.rmin_deadline == RminDeadline::Device ? scn.t_max_device
                                                                    : scn.t_max_server;
  const double window = deadline - t_en_i;
  if (window <= 0.0)
    throw InfeasibleError("device " + std::to_string(i) +
                          ": encryption already exceeds the transmission deadline");
  return scn.devices[i].tx_data_bits / window;
}

double update_auxiliary(const Scenario& scn, std::size_t i, double p, double b) {
  if (p <= 0.0 || b <= 0.0)
    throw std::invalid_argument("update_auxiliary: p and b must be positive");
  const double r = shannon_rate(b, p, scn.devices[i].channel_gain, scn.noise_density);
  if (r <= 0.0) throw std::invalid_argument("update_auxiliary: zero rate");
  return 1.0 / (2.0 * p * scn.devices[i].tx_data_bits * r);
}

Stage2Context make_context(const Scenario& scn, const std::vector<double>& t_en) {
  if (t_en.size() != scn.device_count())
    throw std::invalid_argument("stage2: t_en size mismatch");
  Stage2Context ctx;
  ctx.t_en = t_en;
  ctx.r_min.resize(t_en.size());
  double b_needed = 0.0;
  for (std::size_t i = 0; i < t_en.size(); ++i) {
    ctx.r_min[i] = min_rate(scn, i, t_en[i]);
    const DeviceProfile& dev = scn.devices[i];
    const double r_cap = dev.p_max * dev.channel_gain / (scn.noise_density * kLn2);
    if (ctx.r_min[i] >= r_cap)
      throw InfeasibleError("device " + std::to_string(i) +
                            ": minimum rate exceeds the power-capped channel capacity");
    // bandwidth needed at full power to hit r_min exactly
    auto gap = [&](double b) {
      return shannon_rate(b, dev.p_max, dev.channel_gain, scn.noise_density) - ctx.r_min[i];
    };
    double lo = scn.b_total, hi = scn.b_total;
    double flo = gap(lo), fhi = flo;
    int guard = 0;
    while (flo > 0.0 && ++guard < 600) { lo *= 0.5; flo = gap(lo); }
    guard = 0;
    while (fhi < 0.0 && ++guard < 600) { hi *= 2.0; fhi = gap(hi); }
    b_needed += (flo > 0.0) ? lo : brent_root(gap, lo, hi, flo, fhi, 1e-11);
  }
  if (b_needed > scn.b_total * (1.0 + kBudgetRelTol))
    throw InfeasibleError("stage2: minimum rates need more bandwidth than the budget");
  return ctx;
}

Stage2Context make_coupled_context(const Scenario& scn, const std::vector<double>& lam) {
  if (lam.size() != scn.device_count())
    throw std::invalid_argument("stage2: lambda size mismatch");
  std::vector<double> t_en(lam.size());
  std::vector<double> window_coef(lam.size());
  for (std::size_t i = 0; i < lam.size(); ++i) {
    const double enc_cycles =
        scn.fit.y1(lam[i]) * scn.devices[i].samples * scn.devices[i].params_per_sample;
    t_en[i] = enc_cycles / scn.devices[i].g_max; // loosest feasible split
    window_coef[i] = scn.kappa * enc_cycles * enc_cycles * enc_cycles;
  }
  Stage2Context ctx = make_context(scn, t_en);
  for (std::size_t i = 0; i < lam.size(); ++i) {
    // whatever deadline backs r_min, the encryption window left at the
    // device CPU cap is a hard floor on the rate
    const double cap_rate = scn.devices[i].tx_data_bits / (scn.t_max_device - t_en[i]);
    ctx.r_min[i] = std::max(ctx.r_min[i], cap_rate);
  }
  ctx.window_coef = std::move(window_coef);
  ctx.device_deadline = scn.t_max_device;
  return ctx;
}

double surrogate_objective(const Scenario& scn, const Stage2Context& ctx,
                           const std::vector<double>& p, const std::vector<double>& b) {
  double total = 0.0;
  for (std::size_t i = 0; i < scn.device_count(); ++i) {
    const double r = shannon_rate(b[i], p[i], scn.devices[i].channel_gain, scn.noise_density);
    const double pd = p[i] * scn.devices[i].tx_data_bits;
    total += pd * pd * ctx.z[i] + 1.0 / (4.0 * r * r * ctx.z[i]);
  }
  return total;
}

double transmission_energy(const Scenario& scn, const std::vector<double>& p,
                           const std::vector<double>& b) {
  double total = 0.0;
  for (std::size_t i = 0; i < scn.device_count(); ++i) {
    const double r = shannon_rate(b[i], p[i], scn.devices[i].channel_gain, scn.noise_density);
    total += p[i] * scn.devices[i].tx_data_bits / r;
  }
  return total;
}

double block_objective(const Scenario& scn, const Stage2Context& ctx,
                       const std::vector<double>& p, const std::vector<double>& b) {
  double total = transmission_energy(scn, p, b);
  if (!ctx.coupled()) return total;
  for (std::size_t i = 0; i < scn.device_count(); ++i) {
    const double r = shannon_rate(b[i], p[i], scn.devices[i].channel_gain, scn.noise_density);
    const double window = ctx.device_deadline - scn.devices[i].tx_data_bits / r;
    total += window > 0.0 ? ctx.window_coef[i] / (window * window)
                          : std::numeric_limits<double>::infinity();
  }
  return total;
}

PowerBandwidthSolution solve_power_bandwidth(const Scenario& scn, const Stage2Context& ctx,
                                             const PowerBandwidthSolution* warm) {
  const std::size_t n = scn.device_count();
  if (ctx.z.size() != n)
    throw std::invalid_argument("solve_power_bandwidth: auxiliary variables not set");
  std::vector<DeviceRadio> radios = radio_table(scn, ctx);

  std::vector<double> b_hint(n, scn.b_total / static_cast<double>(n));
  std::vector<double> gamma_hint(n, 0.0);
  if (warm && warm->b.size() == n) {
    b_hint = warm->b;
    gamma_hint = warm->gamma;
  }

  std::vector<DevicePoint> pts(n);
  auto bandwidth_excess = [&](double beta) {
    double used = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      pts[i] = device_point(radios[i], beta, b_hint[i], gamma_hint[i]);
      b_hint[i] = pts[i].b;
      gamma_hint[i] = pts[i].gamma;
      used += pts[i].b;
    }
    return used - scn.b_total;
  };

  // beta > 0 always: bandwidth has positive marginal value, so the budget
  // binds. Bracket by doubling, then bisect on the budget residual.
  double beta_lo = 1e-12;
  double beta_hi = (warm && warm->beta > 0.0) ? warm->beta : 1.0;
  double f_hi = bandwidth_excess(beta_hi);
  int guard = 0;
  while (f_hi > 0.0 && ++guard < 400) {
    beta_lo = beta_hi;
    beta_hi *= 2.0;
    f_hi = bandwidth_excess(beta_hi);
  }
  if (f_hi > 0.0)
    throw InfeasibleError("stage2: bandwidth budget cannot be met at any price");
  if (beta_lo > 1e-12) {
    // bracket confirmed by the doubling loop
  } else {
    double f_lo = bandwidth_excess(beta_lo);
    guard = 0;
    while (f_lo < 0.0 && ++guard < 100) {
      beta_hi = beta_lo;
      f_hi = f_lo;
      beta_lo *= 1e-3;
      f_lo = bandwidth_excess(beta_lo);
    }
  }

  const double tol = kBudgetRelTol * scn.b_total;
  double beta = beta_hi;
  double residual = f_hi;
  for (int it = 0; it < 400 && std::fabs(residual) > tol; ++it) {
    const double mid = 0.5 * (beta_lo + beta_hi);
    residual = bandwidth_excess(mid);
    beta = mid;
    if (residual > 0.0)
      beta_lo = mid;
    else
      beta_hi = mid;
    if ((beta_hi - beta_lo) <= 1e-16 * beta_hi) break;
  }
  if (residual > 0.0) beta = beta_hi; // leave the budget side feasible
  // re-evaluate so the per-device points match the returned multiplier
  residual = bandwidth_excess(beta);

  PowerBandwidthSolution sol;
  sol.beta = beta;
  sol.p.resize(n);
  sol.b.resize(n);
  sol.gamma.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    sol.p[i] = pts[i].p;
    sol.b[i] = pts[i].b;
    sol.gamma[i] = pts[i].gamma;
  }
  return sol;
}

FractionalProgrammingResult fractional_programming(const Scenario& scn,
                                                   const std::vector<double>& t_en,
                                                   const std::vector<double>& init_p,
                                                   const std::vector<double>& init_b,
                                                   int max_iter, double eps) {
  return fractional_programming(scn, make_context(scn, t_en), init_p, init_b, max_iter,
                                eps);
}

FractionalProgrammingResult fractional_programming(const Scenario& scn, Stage2Context ctx,
                                                   const std::vector<double>& init_p,
                                                   const std::vector<double>& init_b,
                                                   int max_iter, double eps) {
  if (max_iter < 1) throw std::invalid_argument("fractional_programming: max_iter >= 1");
  const std::size_t n = scn.device_count();
  if (init_p.size() != n || init_b.size() != n)
    throw std::invalid_argument("fractional_programming: initial point size mismatch");

  ctx.z.resize(n);
  for (std::size_t i = 0; i < n; ++i) ctx.z[i] = update_auxiliary(scn, i, init_p[i], init_b[i]);

  FractionalProgrammingResult res;
  res.p = init_p;
  res.b = init_b;
  res.gamma.assign(n, 0.0);
  res.z = ctx.z;
  res.objective_trace.push_back(block_objective(scn, ctx, init_p, init_b));

  double best = res.objective_trace.front();
  PowerBandwidthSolution warm;

  for (int iter = 1; iter <= max_iter; ++iter) {
    res.iterations = iter;
    const std::vector<double> z_used = ctx.z;
    const PowerBandwidthSolution pb =
        solve_power_bandwidth(scn, ctx, iter > 1 ? &warm : nullptr);
    warm = pb;

    const double objective = block_objective(scn, ctx, pb.p, pb.b);
    if (objective > best * (1.0 + 1e-12)) {
      // inside solver tolerance of the fixed point; a further step cannot help
      res.converged = true;
      break;
    }
    best = objective;
    res.p = pb.p;
    res.b = pb.b;
    res.gamma = pb.gamma;
    res.beta = pb.beta;
    res.z = z_used;
    res.objective_trace.push_back(objective);

    double dz = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double z_new = update_auxiliary(scn, i, pb.p[i], pb.b[i]);
      dz = std::max(dz, std::fabs(z_new - ctx.z[i]) / std::max(std::fabs(ctx.z[i]),
                                                               1e-300));
      ctx.z[i] = z_new;
    }
    if (dz <= eps) {
      res.converged = true;
      break;
    }
  }
  return res;
}

}  // namespace privtuner::stage2
