#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace privtuner {

// Thrown when a scenario, device, or allocation cannot satisfy a hard
// constraint. Infeasibility discovered by check_feasibility is reported as
// data instead; this exception is for callers that need a solution to exist.
class InfeasibleError : public std::runtime_error {
 public:
  explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

// Fitted cost/security curves over the FHE polynomial degree lambda:
//   encryption cycles per parameter   y1(l) = c1*(l + c2)^2
//   cycles per ciphertext addition    y3(l) = c3*l + c4
//   cycles per ciphertext multiply    y4(l) = c5*l + c6
//   security level in bits            y5(l) = c7*l + c8
struct FitModel {
  double c1 = 0.0;
  double c2 = 0.0;
  double c3 = 0.0;
  double c4 = 0.0;
  double c5 = 0.0;
  double c6 = 0.0;
  double c7 = 0.0;
  double c8 = 0.0;

  double y1(double lam) const { return c1 * (lam + c2) * (lam + c2); }
  double y3(double lam) const { return c3 * lam + c4; }
  double y4(double lam) const { return c5 * lam + c6; }
  double y5(double lam) const { return c7 * lam + c8; }

  // dy1/dlam; y3, y4, y5 have constant slopes c3, c5, c7.
  double y1_prime(double lam) const { return 2.0 * c1 * (lam + c2); }

  // Positive leading coefficients and positive y3/y4/y5 over every option.
  // The fitted lines go negative for small lambda, so the option set is the
  // domain of validity.
  void validate(const std::vector<double>& lambda_options) const;
};

struct DeviceProfile {
  double samples = 0.0;                    // D_n
  double params_per_sample = 0.0;          // s_n, encrypted per sample
  double additions_per_sample = 0.0;       // a_n
  double multiplications_per_sample = 0.0; // m_n
  double other_cycles = 0.0;               // fixed prediction overhead
  double adapter_update_cycles = 0.0;      // server-side update cost per sample
  double tx_data_bits = 0.0;               // d_n, ciphertext upload size
  double channel_gain = 0.0;               // h_n, linear power ratio
  double privacy_weight = 0.0;             // sigma_n
  double g_max = 0.0;                      // Hz, device CPU cap
  double p_max = 0.0;                      // W, transmit power cap

  void validate(std::size_t index) const;
};

// Which deadline bounds the minimum uplink rate in stage 2. The device
// deadline is the consistent choice (encryption + transmission share it);
// the server variant is kept for fidelity studies.
enum class RminDeadline { Device, Server };

struct Scenario {
  std::vector<DeviceProfile> devices;
  double f_total = 0.0;       // Hz, server CPU budget
  double b_total = 0.0;       // Hz, FDMA bandwidth budget
  double noise_density = 0.0; // W/Hz
  double kappa = 0.0;         // effective switched capacitance
  double t_max_device = 0.0;  // s
  double t_max_server = 0.0;  // s
  double omega = 0.0;         // privacy weight in the objective
  std::vector<double> lambda_options; // ascending positive integers
  FitModel fit;
  RminDeadline rmin_deadline = RminDeadline::Device;
  double q_bits = 210.0;      // coefficient modulus, metadata only

  std::size_t device_count() const { return devices.size(); }
  void validate() const;
};

// Candidate solution; one entry per device.
struct Allocation {
  std::vector<double> f;   // Hz, server CPU share
  std::vector<double> g;   // Hz, device CPU
  std::vector<double> p;   // W
  std::vector<double> b;   // Hz
  std::vector<double> lam; // polynomial degree

  std::size_t device_count() const { return f.size(); }
  static Allocation zeros(std::size_t n);
};

struct CostBreakdown {
  double t_en = 0.0;   // s, encryption
  double e_en = 0.0;   // J
  double t_tr = 0.0;   // s, uplink transmission
  double e_tr = 0.0;   // J
  double t_cmp = 0.0;  // s, server prediction + adapter update
  double e_cmp = 0.0;  // J
  double privacy = 0.0; // bits
  double rate = 0.0;   // bits/s

  double energy() const { return e_en + e_tr + e_cmp; }
};

// ---------------------------------------------------------------------------
// Closed-form evaluations
// ---------------------------------------------------------------------------

struct FittedValues {
  double y1 = 0.0;
  double y3 = 0.0;
  double y4 = 0.0;
  double y5 = 0.0;
};

FittedValues eval_fitted(const FitModel& fit, double lam);

// Per-sample prediction cycles y2 = y3*a + y4*m + other. Throws
// std::domain_error when lambda is outside the range where y3, y4 > 0.
double prediction_cycles(const FitModel& fit, double lam, const DeviceProfile& dev);

// Shannon rate b*log2(1 + p*h/(n0*b)), evaluated with log1p so the
// b -> infinity tail converges to p*h/(n0*ln 2) instead of 0*inf, and with
// an asymptotic branch when p*h/(n0*b) overflows.
double shannon_rate(double b, double p, double h, double n0);

// Device-side costs (encryption + transmission) at a given allocation slice.
CostBreakdown device_costs(const Scenario& scn, std::size_t i,
                           double g, double p, double b, double lam);

struct ServerCosts {
  double t_cmp = 0.0;
  double e_cmp = 0.0;
};
ServerCosts server_costs(const Scenario& scn, std::size_t i, double f, double lam);

// Full per-device breakdown for an allocation.
std::vector<CostBreakdown> evaluate_allocation(const Scenario& scn, const Allocation& alloc);

double total_energy(const Scenario& scn, const Allocation& alloc);
double total_privacy(const Scenario& scn, const Allocation& alloc); // sum sigma_n * y5
double total_objective(const Scenario& scn, const Allocation& alloc);

// ---------------------------------------------------------------------------
// Feasibility
// ---------------------------------------------------------------------------

struct ConstraintCheck {
  std::string name;  // e.g. "server_cpu_total", "device_deadline"
  int device = -1;   // -1 for system-wide constraints
  double limit = 0.0;
  double used = 0.0;
  double margin = 0.0; // limit - used; >= 0 when satisfied
  bool ok = false;
};

struct FeasibilityReport {
  std::vector<ConstraintCheck> checks;
  bool feasible = true;

  const ConstraintCheck* first_violation() const;
  std::string summary() const;
};

// Relative slack applied to every feasibility comparison so that exactly
// budget-exhausting allocations (the solver's construction) pass.
inline constexpr double kFeasibilityRelTol = 1e-9;

// Tolerance for "lambda is one of the options", relative to the smallest option.
inline constexpr double kLambdaSnapRelTol = 1e-6;

FeasibilityReport check_feasibility(const Scenario& scn, const Allocation& alloc);

// Linear channel gain from the 128.1 + 37.6*log10(d_km) path-loss model
// plus a shadowing term in dB.
double channel_gain(double distance_km, double shadow_db);

}  // namespace privtuner
