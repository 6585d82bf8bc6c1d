#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "privtuner/model.hpp"

namespace privtuner::io {

// Malformed scenario/config input; maps to the CLI's config-error exit code.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Knobs for scenario generation. Radio quantities are taken in dBm/dB as
// configured and converted to SI exactly once, when the scenario is built;
// scenario files only ever hold W, Hz, seconds and linear gains.
struct GenerateParams {
  std::size_t devices = 10;
  double samples = 10.0;
  double params_per_sample = 1e4;
  double additions_per_sample = 1e5;
  double multiplications_per_sample = 1e6;
  double other_cycles = 1e9;
  double adapter_update_cycles = 1e9;
  double tx_data_bits = 3e9;
  double f_total_hz = 10e9;
  double g_max_hz = 3e9;
  double b_total_hz = 10e6;
  double p_max_dbm = 20.0;
  double noise_dbm_per_hz = -174.0;
  double kappa = 1e-28;
  double t_max_device_s = 4000.0;
  double t_max_server_s = 5000.0;
  double omega = 1.0;
  std::vector<double> lambda_options = {4096.0, 8192.0, 16384.0};
  std::vector<double> privacy_weights = {10.0, 5.0, 1.0};
  double min_distance_km = 0.05;
  double max_distance_km = 0.5;
  double shadow_std_db = 8.0;

  void validate() const;
};

double dbm_to_watts(double dbm);

// Seeded scenario with the bundled fit constants, path-loss channels at
// uniform distances, shadowing, and privacy weights cycled over the
// configured levels then shuffled. Same seed, same scenario, bit for bit.
Scenario generate_scenario(std::uint64_t seed, const GenerateParams& params);

// Key-value text format, one scalar per line, devices in "device"/"end"
// blocks, '#' comments. Doubles are written with 17 significant digits so a
// write/read cycle is exact.
void write_scenario(const Scenario& scn, std::ostream& out);
void write_scenario_file(const Scenario& scn, const std::string& path);
Scenario read_scenario(std::istream& in);
Scenario read_scenario_file(const std::string& path);

}  // namespace privtuner::io
