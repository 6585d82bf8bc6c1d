#include "privtuner/model.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace privtuner {

namespace {
constexpr double kLn2 = 0.6931471805599453;

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}
}  // namespace

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

void FitModel::validate(const std::vector<double>& lambda_options) const {
  require(c1 > 0.0, "fit: c1 must be positive");
  require(c3 > 0.0, "fit: c3 must be positive");
  require(c5 > 0.0, "fit: c5 must be positive");
  require(c7 > 0.0, "fit: c7 must be positive");
  for (double lam : lambda_options) {
    require(lam + c2 > 0.0, "fit: y1 not increasing at option " + std::to_string(lam));
    require(y3(lam) > 0.0, "fit: y3 non-positive at option " + std::to_string(lam));
    require(y4(lam) > 0.0, "fit: y4 non-positive at option " + std::to_string(lam));
    require(y5(lam) > 0.0, "fit: y5 non-positive at option " + std::to_string(lam));
  }
}

void DeviceProfile::validate(std::size_t index) const {
  const std::string tag = "device " + std::to_string(index) + ": ";
  require(samples > 0.0, tag + "samples must be positive");
  require(params_per_sample > 0.0, tag + "params_per_sample must be positive");
  require(additions_per_sample >= 0.0, tag + "additions_per_sample must be non-negative");
  require(multiplications_per_sample >= 0.0, tag + "multiplications_per_sample must be non-negative");
  require(other_cycles > 0.0, tag + "other_cycles must be positive");
  require(adapter_update_cycles > 0.0, tag + "adapter_update_cycles must be positive");
  require(tx_data_bits > 0.0, tag + "tx_data_bits must be positive");
  require(channel_gain > 0.0, tag + "channel_gain must be positive");
  require(privacy_weight >= 0.0, tag + "privacy_weight must be non-negative");
  require(g_max > 0.0, tag + "g_max must be positive");
  require(p_max > 0.0, tag + "p_max must be positive");
}

void Scenario::validate() const {
  require(!devices.empty(), "scenario: needs at least one device");
  require(f_total > 0.0, "scenario: f_total must be positive");
  require(b_total > 0.0, "scenario: b_total must be positive");
  require(noise_density > 0.0, "scenario: noise_density must be positive");
  require(kappa > 0.0, "scenario: kappa must be positive");
  require(t_max_device > 0.0, "scenario: t_max_device must be positive");
  require(t_max_server > 0.0, "scenario: t_max_server must be positive");
  require(omega >= 0.0, "scenario: omega must be non-negative");
  require(!lambda_options.empty(), "scenario: lambda_options must be non-empty");
  double prev = 0.0;
  for (double lam : lambda_options) {
    require(lam > 0.0, "scenario: lambda options must be positive");
    require(std::floor(lam) == lam, "scenario: lambda options must be integers");
    require(lam > prev, "scenario: lambda options must be strictly ascending");
    prev = lam;
  }
  for (std::size_t i = 0; i < devices.size(); ++i) devices[i].validate(i);
  fit.validate(lambda_options);
}

Allocation Allocation::zeros(std::size_t n) {
  Allocation a;
  a.f.assign(n, 0.0);
  a.g.assign(n, 0.0);
  a.p.assign(n, 0.0);
  a.b.assign(n, 0.0);
  a.lam.assign(n, 0.0);
  return a;
}

// ---------------------------------------------------------------------------
// Closed-form evaluations
// ---------------------------------------------------------------------------

FittedValues eval_fitted(const FitModel& fit, double lam) {
  require(lam > 0.0, "eval_fitted: lambda must be positive");
  return {fit.y1(lam), fit.y3(lam), fit.y4(lam), fit.y5(lam)};
}

double prediction_cycles(const FitModel& fit, double lam, const DeviceProfile& dev) {
  const FittedValues v = eval_fitted(fit, lam);
  if (v.y3 <= 0.0 || v.y4 <= 0.0)
    throw std::domain_error("prediction_cycles: lambda outside fitted domain (y3 or y4 <= 0)");
  return v.y3 * dev.additions_per_sample + v.y4 * dev.multiplications_per_sample +
         dev.other_cycles;
}

double shannon_rate(double b, double p, double h, double n0) {
  require(b >= 0.0, "shannon_rate: bandwidth must be non-negative");
  require(p >= 0.0, "shannon_rate: power must be non-negative");
  require(h > 0.0, "shannon_rate: channel gain must be positive");
  require(n0 > 0.0, "shannon_rate: noise density must be positive");
  if (p == 0.0 || b == 0.0) return 0.0;
  const double snr = p * h / (n0 * b);
  if (!std::isfinite(snr)) {
    // b tiny enough that the SNR overflows; log2(1+snr) ~ log2(p*h/n0) - log2(b)
    return b * (std::log(p * h / n0) - std::log(b)) / kLn2;
  }
  return b * std::log1p(snr) / kLn2;
}

CostBreakdown device_costs(const Scenario& scn, std::size_t i,
                           double g, double p, double b, double lam) {
  const DeviceProfile& dev = scn.devices.at(i);
  require(g > 0.0, "device_costs: g must be positive");
  require(p > 0.0, "device_costs: p must be positive");
  require(b > 0.0, "device_costs: b must be positive");
  const FittedValues v = eval_fitted(scn.fit, lam);

  CostBreakdown c;
  const double enc_cycles = v.y1 * dev.samples * dev.params_per_sample;
  c.t_en = enc_cycles / g;
  c.e_en = scn.kappa * enc_cycles * g * g;
  c.rate = shannon_rate(b, p, dev.channel_gain, scn.noise_density);
  if (c.rate <= 0.0 && dev.tx_data_bits > 0.0)
    throw InfeasibleError("device " + std::to_string(i) + ": zero uplink rate with data pending");
  c.t_tr = dev.tx_data_bits / c.rate;
  c.e_tr = p * c.t_tr;
  c.privacy = v.y5;
  return c;
}

ServerCosts server_costs(const Scenario& scn, std::size_t i, double f, double lam) {
  const DeviceProfile& dev = scn.devices.at(i);
  require(f > 0.0, "server_costs: f must be positive");
  const double cycles = (prediction_cycles(scn.fit, lam, dev) + dev.adapter_update_cycles) *
                        dev.samples;
  return {cycles / f, scn.kappa * cycles * f * f};
}

std::vector<CostBreakdown> evaluate_allocation(const Scenario& scn, const Allocation& alloc) {
  const std::size_t n = scn.device_count();
  require(alloc.f.size() == n && alloc.g.size() == n && alloc.p.size() == n &&
              alloc.b.size() == n && alloc.lam.size() == n,
          "evaluate_allocation: allocation size mismatch");
  std::vector<CostBreakdown> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = device_costs(scn, i, alloc.g[i], alloc.p[i], alloc.b[i], alloc.lam[i]);
    const ServerCosts s = server_costs(scn, i, alloc.f[i], alloc.lam[i]);
    out[i].t_cmp = s.t_cmp;
    out[i].e_cmp = s.e_cmp;
  }
  return out;
}

double total_energy(const Scenario& scn, const Allocation& alloc) {
  double e = 0.0;
  for (const CostBreakdown& c : evaluate_allocation(scn, alloc)) e += c.energy();
  return e;
}

double total_privacy(const Scenario& scn, const Allocation& alloc) {
  double s = 0.0;
  for (std::size_t i = 0; i < scn.device_count(); ++i)
    s += scn.devices[i].privacy_weight * scn.fit.y5(alloc.lam[i]);
  return s;
}

double total_objective(const Scenario& scn, const Allocation& alloc) {
  return total_energy(scn, alloc) - scn.omega * total_privacy(scn, alloc);
}

// ---------------------------------------------------------------------------
// Feasibility
// ---------------------------------------------------------------------------

const ConstraintCheck* FeasibilityReport::first_violation() const {
  for (const ConstraintCheck& c : checks)
    if (!c.ok) return &c;
  return nullptr;
}

std::string FeasibilityReport::summary() const {
  std::ostringstream os;
  if (feasible) {
    os << "feasible";
    return os.str();
  }
  os << "infeasible:";
  for (const ConstraintCheck& c : checks) {
    if (c.ok) continue;
    os << " " << c.name;
    if (c.device >= 0) os << "[" << c.device << "]";
  }
  return os.str();
}

namespace {
ConstraintCheck make_check(std::string name, int device, double limit, double used) {
  ConstraintCheck c;
  c.name = std::move(name);
  c.device = device;
  c.limit = limit;
  c.used = used;
  c.margin = limit - used;
  c.ok = used <= limit + kFeasibilityRelTol * std::max(std::fabs(limit), 1.0);
  return c;
}
}  // namespace

FeasibilityReport check_feasibility(const Scenario& scn, const Allocation& alloc) {
  const std::size_t n = scn.device_count();
  FeasibilityReport rep;

  double f_sum = 0.0, b_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    f_sum += alloc.f[i];
    b_sum += alloc.b[i];
  }
  rep.checks.push_back(make_check("server_cpu_total", -1, scn.f_total, f_sum));
  rep.checks.push_back(make_check("bandwidth_total", -1, scn.b_total, b_sum));

  for (std::size_t i = 0; i < n; ++i) {
    const DeviceProfile& dev = scn.devices[i];
    rep.checks.push_back(make_check("device_cpu_cap", static_cast<int>(i),
                                    dev.g_max, alloc.g[i]));
    rep.checks.push_back(make_check("tx_power_cap", static_cast<int>(i),
                                    dev.p_max, alloc.p[i]));

    // lambda must sit on one of the configured options
    double dist = std::numeric_limits<double>::infinity();
    for (double opt : scn.lambda_options)
      dist = std::min(dist, std::fabs(alloc.lam[i] - opt));
    ConstraintCheck lc;
    lc.name = "lambda_option";
    lc.device = static_cast<int>(i);
    lc.limit = 0.0;
    lc.used = dist;
    lc.margin = -dist;
    lc.ok = dist <= kLambdaSnapRelTol * scn.lambda_options.front();
    rep.checks.push_back(lc);

    const CostBreakdown c = device_costs(scn, i, alloc.g[i], alloc.p[i], alloc.b[i], alloc.lam[i]);
    const ServerCosts s = server_costs(scn, i, alloc.f[i], alloc.lam[i]);
    rep.checks.push_back(make_check("device_deadline", static_cast<int>(i),
                                    scn.t_max_device, c.t_en + c.t_tr));
    rep.checks.push_back(make_check("server_deadline", static_cast<int>(i),
                                    scn.t_max_server, s.t_cmp));
  }

  for (const ConstraintCheck& c : rep.checks) rep.feasible = rep.feasible && c.ok;
  return rep;
}

double channel_gain(double distance_km, double shadow_db) {
  require(distance_km > 0.0, "channel_gain: distance must be positive");
  const double path_loss_db = 128.1 + 37.6 * std::log10(distance_km) + shadow_db;
  return std::pow(10.0, -path_loss_db / 10.0);
}

}  // namespace privtuner
