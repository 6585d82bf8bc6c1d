#include "privtuner/scenario_io.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "privtuner/rng.hpp"

namespace privtuner::io {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream is(line);
  std::string tok;
  while (is >> tok) {
    if (tok.front() == '#') break;
    out.push_back(tok);
  }
  return out;
}

double parse_double(const std::string& tok, std::size_t lineno) {
  try {
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("scenario: bad number '" + tok + "' on line " + std::to_string(lineno));
  }
}

}  // namespace

void GenerateParams::validate() const {
  auto bad = [](const std::string& what) { throw ConfigError("generate: " + what); };
  if (devices < 1) bad("devices must be >= 1");
  if (samples <= 0 || params_per_sample <= 0 || other_cycles <= 0 ||
      adapter_update_cycles <= 0 || tx_data_bits <= 0)
    bad("workload quantities must be positive");
  if (additions_per_sample < 0 || multiplications_per_sample < 0)
    bad("operation counts must be non-negative");
  if (f_total_hz <= 0 || g_max_hz <= 0 || b_total_hz <= 0) bad("budgets must be positive");
  if (kappa <= 0 || t_max_device_s <= 0 || t_max_server_s <= 0)
    bad("kappa and time budgets must be positive");
  if (omega < 0) bad("omega must be non-negative");
  if (lambda_options.empty()) bad("lambda_options must be non-empty");
  if (privacy_weights.empty()) bad("privacy_weights must be non-empty");
  if (!(min_distance_km > 0 && max_distance_km >= min_distance_km))
    bad("distance range must be positive and ordered");
  if (shadow_std_db < 0) bad("shadow_std_db must be non-negative");
}

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

Scenario generate_scenario(std::uint64_t seed, const GenerateParams& params) {
  params.validate();
  Rng rng(seed);

  Scenario scn;
  scn.f_total = params.f_total_hz;
  scn.b_total = params.b_total_hz;
  scn.noise_density = dbm_to_watts(params.noise_dbm_per_hz);
  scn.kappa = params.kappa;
  scn.t_max_device = params.t_max_device_s;
  scn.t_max_server = params.t_max_server_s;
  scn.omega = params.omega;
  scn.lambda_options = params.lambda_options;

  // bundled measured fit constants
  scn.fit.c1 = 0.0066;
  scn.fit.c2 = 22421.0;
  scn.fit.c3 = 29.0862;
  scn.fit.c4 = -30253.0;
  scn.fit.c5 = 68.6450;
  scn.fit.c6 = 57511.0;
  scn.fit.c7 = 0.0205;
  scn.fit.c8 = -30.73;

  scn.devices.resize(params.devices);
  for (DeviceProfile& dev : scn.devices) {
    dev.samples = params.samples;
    dev.params_per_sample = params.params_per_sample;
    dev.additions_per_sample = params.additions_per_sample;
    dev.multiplications_per_sample = params.multiplications_per_sample;
    dev.other_cycles = params.other_cycles;
    dev.adapter_update_cycles = params.adapter_update_cycles;
    dev.tx_data_bits = params.tx_data_bits;
    dev.g_max = params.g_max_hz;
    dev.p_max = dbm_to_watts(params.p_max_dbm);
    const double distance = rng.uniform(params.min_distance_km, params.max_distance_km);
    const double shadow = rng.normal(0.0, params.shadow_std_db);
    dev.channel_gain = channel_gain(distance, shadow);
  }

  // privacy-concern levels cycled over the devices, then shuffled so every
  // level is present whenever N >= levels
  std::vector<double> weights(params.devices);
  for (std::size_t i = 0; i < weights.size(); ++i)
    weights[i] = params.privacy_weights[i % params.privacy_weights.size()];
  for (std::size_t i = weights.size(); i > 1; --i)
    std::swap(weights[i - 1], weights[rng.pick_index(i)]);
  for (std::size_t i = 0; i < weights.size(); ++i)
    scn.devices[i].privacy_weight = weights[i];

  scn.validate();
  return scn;
}

void write_scenario(const Scenario& scn, std::ostream& out) {
  out << "# privtuner scenario\n";
  out << "schema_version 1\n";
  out << "f_total " << fmt(scn.f_total) << "\n";
  out << "b_total " << fmt(scn.b_total) << "\n";
  out << "noise_density " << fmt(scn.noise_density) << "\n";
  out << "kappa " << fmt(scn.kappa) << "\n";
  out << "t_max_device " << fmt(scn.t_max_device) << "\n";
  out << "t_max_server " << fmt(scn.t_max_server) << "\n";
  out << "omega " << fmt(scn.omega) << "\n";
  out << "q_bits " << fmt(scn.q_bits) << "\n";
  out << "rmin_deadline " << (scn.rmin_deadline == RminDeadline::Device ? "device" : "server")
      << "\n";
  out << "lambda_options";
  for (double lam : scn.lambda_options) out << " " << fmt(lam);
  out << "\n";
  out << "fit " << fmt(scn.fit.c1) << " " << fmt(scn.fit.c2) << " " << fmt(scn.fit.c3) << " "
      << fmt(scn.fit.c4) << " " << fmt(scn.fit.c5) << " " << fmt(scn.fit.c6) << " "
      << fmt(scn.fit.c7) << " " << fmt(scn.fit.c8) << "\n";
  for (const DeviceProfile& dev : scn.devices) {
    out << "device\n";
    out << "  samples " << fmt(dev.samples) << "\n";
    out << "  params_per_sample " << fmt(dev.params_per_sample) << "\n";
    out << "  additions_per_sample " << fmt(dev.additions_per_sample) << "\n";
    out << "  multiplications_per_sample " << fmt(dev.multiplications_per_sample) << "\n";
    out << "  other_cycles " << fmt(dev.other_cycles) << "\n";
    out << "  adapter_update_cycles " << fmt(dev.adapter_update_cycles) << "\n";
    out << "  tx_data_bits " << fmt(dev.tx_data_bits) << "\n";
    out << "  channel_gain " << fmt(dev.channel_gain) << "\n";
    out << "  privacy_weight " << fmt(dev.privacy_weight) << "\n";
    out << "  g_max " << fmt(dev.g_max) << "\n";
    out << "  p_max " << fmt(dev.p_max) << "\n";
    out << "end\n";
  }
}

void write_scenario_file(const Scenario& scn, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("scenario: cannot write " + path);
  write_scenario(scn, out);
}

Scenario read_scenario(std::istream& in) {
  Scenario scn;
  bool saw_version = false;
  DeviceProfile dev;
  bool in_device = false;

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::vector<std::string> tok = tokenize(line);
    if (tok.empty()) continue;
    const std::string& key = tok.front();

    if (in_device) {
      if (key == "end") {
        scn.devices.push_back(dev);
        in_device = false;
        continue;
      }
      if (tok.size() != 2)
        throw ConfigError("scenario: device field needs one value, line " +
                          std::to_string(lineno));
      const double v = parse_double(tok[1], lineno);
      if (key == "samples") dev.samples = v;
      else if (key == "params_per_sample") dev.params_per_sample = v;
      else if (key == "additions_per_sample") dev.additions_per_sample = v;
      else if (key == "multiplications_per_sample") dev.multiplications_per_sample = v;
      else if (key == "other_cycles") dev.other_cycles = v;
      else if (key == "adapter_update_cycles") dev.adapter_update_cycles = v;
      else if (key == "tx_data_bits") dev.tx_data_bits = v;
      else if (key == "channel_gain") dev.channel_gain = v;
      else if (key == "privacy_weight") dev.privacy_weight = v;
      else if (key == "g_max") dev.g_max = v;
      else if (key == "p_max") dev.p_max = v;
      else
        throw ConfigError("scenario: unknown device key '" + key + "' on line " +
                          std::to_string(lineno));
      continue;
    }

    if (key == "device") {
      dev = DeviceProfile{};
      in_device = true;
      continue;
    }
    if (key == "schema_version") {
      if (tok.size() != 2 || tok[1] != "1")
        throw ConfigError("scenario: unsupported schema_version on line " +
                          std::to_string(lineno));
      saw_version = true;
      continue;
    }
    if (key == "rmin_deadline") {
      if (tok.size() != 2 || (tok[1] != "device" && tok[1] != "server"))
        throw ConfigError("scenario: rmin_deadline must be device|server, line " +
                          std::to_string(lineno));
      scn.rmin_deadline = tok[1] == "device" ? RminDeadline::Device : RminDeadline::Server;
      continue;
    }
    if (key == "lambda_options") {
      if (tok.size() < 2)
        throw ConfigError("scenario: lambda_options needs values, line " +
                          std::to_string(lineno));
      scn.lambda_options.clear();
      for (std::size_t k = 1; k < tok.size(); ++k)
        scn.lambda_options.push_back(parse_double(tok[k], lineno));
      continue;
    }
    if (key == "fit") {
      if (tok.size() != 9)
        throw ConfigError("scenario: fit needs eight constants, line " +
                          std::to_string(lineno));
      scn.fit.c1 = parse_double(tok[1], lineno);
      scn.fit.c2 = parse_double(tok[2], lineno);
      scn.fit.c3 = parse_double(tok[3], lineno);
      scn.fit.c4 = parse_double(tok[4], lineno);
      scn.fit.c5 = parse_double(tok[5], lineno);
      scn.fit.c6 = parse_double(tok[6], lineno);
      scn.fit.c7 = parse_double(tok[7], lineno);
      scn.fit.c8 = parse_double(tok[8], lineno);
      continue;
    }
    if (tok.size() != 2)
      throw ConfigError("scenario: '" + key + "' needs one value, line " +
                        std::to_string(lineno));
    const double v = parse_double(tok[1], lineno);
    if (key == "f_total") scn.f_total = v;
    else if (key == "b_total") scn.b_total = v;
    else if (key == "noise_density") scn.noise_density = v;
    else if (key == "kappa") scn.kappa = v;
    else if (key == "t_max_device") scn.t_max_device = v;
    else if (key == "t_max_server") scn.t_max_server = v;
    else if (key == "omega") scn.omega = v;
    else if (key == "q_bits") scn.q_bits = v;
    else
      throw ConfigError("scenario: unknown key '" + key + "' on line " +
                        std::to_string(lineno));
  }

  if (in_device) throw ConfigError("scenario: unterminated device block");
  if (!saw_version) throw ConfigError("scenario: missing schema_version");
  try {
    scn.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  }
  return scn;
}

Scenario read_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("scenario: cannot open " + path);
  return read_scenario(in);
}

}  // namespace privtuner::io
