#include "privtuner/sweep.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "privtuner/oracle.hpp"
#include "privtuner/rng.hpp"

namespace privtuner::sweep {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

bool known_parameter(const std::string& p) {
  return std::find(kSweepParameters.begin(), kSweepParameters.end(), p) !=
         kSweepParameters.end();
}

bool known_allocator(const std::string& a) {
  return std::find(kAllocators.begin(), kAllocators.end(), a) != kAllocators.end();
}

double now_millis(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
      .count();
}

// Shadowing redraw for repetition k > 0; depends only on (seed, k, device).
Scenario reroll_channels(const Scenario& scn, std::uint64_t seed, int repetition) {
  if (repetition == 0) return scn;
  Scenario out = scn;
  Rng rng(seed + 0x51ed2701a3c5u * static_cast<std::uint64_t>(repetition));
  for (DeviceProfile& dev : out.devices)
    dev.channel_gain *= std::pow(10.0, rng.normal(0.0, 8.0) / 10.0);
  return out;
}

SweepRow solve_point(const Scenario& base, const SweepConfig& cfg, double value,
                     const std::string& allocator, int repetition,
                     const joint::SolveOptions& opts) {
  SweepRow row;
  row.parameter = cfg.parameter;
  row.value = value;
  row.allocator = allocator;
  row.repetition = repetition;
  row.lambda.assign(base.device_count(), std::nullopt);

  const auto t0 = std::chrono::steady_clock::now();
  try {
    const Scenario scn =
        reroll_channels(apply_parameter(base, cfg.parameter, value), cfg.seed, repetition);
    Allocation alloc;
    if (allocator == "proposed") {
      alloc = joint::solve(scn, opts).allocation;
    } else if (allocator == "average") {
      alloc = oracle::average_allocation(scn);
    } else if (allocator == "compute_only") {
      alloc = oracle::optimize_compute_only(scn);
    } else {
      alloc = oracle::optimize_radio_only(scn, opts.max_inner, opts.eps);
    }
    if (!check_feasibility(scn, alloc).feasible) {
      row.status = "infeasible";
      row.millis = now_millis(t0);
      return row;
    }
    row.status = "ok";
    row.objective = total_objective(scn, alloc);
    row.energy = total_energy(scn, alloc);
    row.privacy = total_privacy(scn, alloc);
    for (std::size_t i = 0; i < alloc.lam.size(); ++i) row.lambda[i] = alloc.lam[i];
  } catch (const InfeasibleError&) {
    row.status = "infeasible";
  }
  row.millis = now_millis(t0);
  return row;
}

std::vector<SweepRow> run_impl(const Scenario& scn, const SweepConfig& cfg,
                               const joint::SolveOptions& opts, bool parallel) {
  scn.validate();
  cfg.validate();

  struct Task {
    double value;
    std::string allocator;
    int repetition;
  };
  std::vector<Task> tasks;
  for (double value : cfg.values)
    for (const std::string& allocator : cfg.allocators)
      for (int rep = 0; rep < cfg.repetitions; ++rep)
        tasks.push_back({value, allocator, rep});

  std::vector<SweepRow> rows(tasks.size());
  const std::int64_t total = static_cast<std::int64_t>(tasks.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1) if (parallel)
#endif
  for (std::int64_t t = 0; t < total; ++t) {
    const Task& task = tasks[static_cast<std::size_t>(t)];
    rows[static_cast<std::size_t>(t)] =
        solve_point(scn, cfg, task.value, task.allocator, task.repetition, opts);
  }
  return rows;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  q += '"';
  return q;
}

std::vector<std::string> split_csv_line(const std::string& line, std::size_t lineno) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted)
    throw io::ConfigError("csv: unterminated quote on line " + std::to_string(lineno));
  fields.push_back(cur);
  return fields;
}

std::optional<double> parse_opt(const std::string& s, std::size_t lineno) {
  if (s.empty()) return std::nullopt;
  try {
    return std::stod(s);
  } catch (const std::exception&) {
    throw io::ConfigError("csv: bad number '" + s + "' on line " + std::to_string(lineno));
  }
}

}  // namespace

void SweepConfig::validate() const {
  if (!known_parameter(parameter))
    throw io::ConfigError("sweep: unknown parameter '" + parameter + "'");
  if (values.empty()) throw io::ConfigError("sweep: values must be non-empty");
  if (allocators.empty()) throw io::ConfigError("sweep: allocators must be non-empty");
  for (const std::string& a : allocators)
    if (!known_allocator(a)) throw io::ConfigError("sweep: unknown allocator '" + a + "'");
  if (repetitions < 1) throw io::ConfigError("sweep: repetitions must be >= 1");
}

SweepConfig read_sweep_config(std::istream& in) {
  SweepConfig cfg;
  bool saw_version = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream is(line);
    std::string key;
    if (!(is >> key) || key.front() == '#') continue;
    if (key == "schema_version") {
      std::string v;
      is >> v;
      if (v != "1")
        throw io::ConfigError("sweep: unsupported schema_version on line " +
                              std::to_string(lineno));
      saw_version = true;
    } else if (key == "parameter") {
      is >> cfg.parameter;
    } else if (key == "values") {
      std::string tok;
      cfg.values.clear();
      while (is >> tok) {
        if (tok.front() == '#') break;
        try {
          cfg.values.push_back(std::stod(tok));
        } catch (const std::exception&) {
          throw io::ConfigError("sweep: bad value '" + tok + "' on line " +
                                std::to_string(lineno));
        }
      }
    } else if (key == "allocators") {
      std::string tok;
      cfg.allocators.clear();
      while (is >> tok) {
        if (tok.front() == '#') break;
        cfg.allocators.push_back(tok);
      }
    } else if (key == "repetitions") {
      is >> cfg.repetitions;
    } else if (key == "seed") {
      is >> cfg.seed;
    } else {
      throw io::ConfigError("sweep: unknown key '" + key + "' on line " +
                            std::to_string(lineno));
    }
  }
  if (!saw_version) throw io::ConfigError("sweep: missing schema_version");
  cfg.validate();
  return cfg;
}

SweepConfig read_sweep_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io::ConfigError("sweep: cannot open " + path);
  return read_sweep_config(in);
}

void write_sweep_config(const SweepConfig& cfg, std::ostream& out) {
  out << "# privtuner sweep config\n";
  out << "schema_version 1\n";
  out << "parameter " << cfg.parameter << "\n";
  out << "values";
  for (double v : cfg.values) out << " " << fmt(v);
  out << "\n";
  out << "allocators";
  for (const std::string& a : cfg.allocators) out << " " << a;
  out << "\n";
  out << "repetitions " << cfg.repetitions << "\n";
  out << "seed " << cfg.seed << "\n";
}

Scenario apply_parameter(const Scenario& scn, const std::string& parameter, double value) {
  if (value <= 0.0 && parameter != "omega")
    throw io::ConfigError("sweep: parameter value must be positive");
  Scenario out = scn;
  if (parameter == "b_total") {
    out.b_total = value;
  } else if (parameter == "f_total") {
    out.f_total = value;
  } else if (parameter == "t_max_device") {
    out.t_max_device = value;
  } else if (parameter == "t_max_server") {
    out.t_max_server = value;
  } else if (parameter == "omega") {
    if (value < 0.0) throw io::ConfigError("sweep: omega must be non-negative");
    out.omega = value;
  } else if (parameter == "p_max") {
    for (DeviceProfile& dev : out.devices) dev.p_max = value;
  } else if (parameter == "g_max") {
    for (DeviceProfile& dev : out.devices) dev.g_max = value;
  } else {
    throw io::ConfigError("sweep: unknown parameter '" + parameter + "'");
  }
  return out;
}

std::vector<SweepRow> run_sweep(const Scenario& scn, const SweepConfig& cfg,
                                const joint::SolveOptions& opts) {
  return run_impl(scn, cfg, opts, true);
}

std::vector<SweepRow> run_sweep_serial(const Scenario& scn, const SweepConfig& cfg,
                                       const joint::SolveOptions& opts) {
  return run_impl(scn, cfg, opts, false);
}

void write_rows_csv(const std::vector<SweepRow>& rows, std::size_t device_count,
                    std::ostream& out) {
  out << "parameter,value,allocator,repetition,status,objective,energy,privacy,millis";
  for (std::size_t i = 0; i < device_count; ++i) out << ",lambda_" << i;
  out << "\r\n";
  for (const SweepRow& row : rows) {
    out << csv_field(row.parameter) << "," << fmt(row.value) << ","
        << csv_field(row.allocator) << "," << row.repetition << "," << csv_field(row.status)
        << "," << (row.objective ? fmt(*row.objective) : "") << ","
        << (row.energy ? fmt(*row.energy) : "") << ","
        << (row.privacy ? fmt(*row.privacy) : "") << "," << fmt(row.millis);
    for (std::size_t i = 0; i < device_count; ++i) {
      out << ",";
      if (i < row.lambda.size() && row.lambda[i]) out << fmt(*row.lambda[i]);
    }
    out << "\r\n";
  }
}

void write_rows_csv_file(const std::vector<SweepRow>& rows, std::size_t device_count,
                         const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io::ConfigError("csv: cannot write " + path);
  write_rows_csv(rows, device_count, out);
}

ParsedSweep read_rows_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw io::ConfigError("csv: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split_csv_line(line, 1);
  if (header.size() < 9 || header[0] != "parameter")
    throw io::ConfigError("csv: unexpected header");
  ParsedSweep parsed;
  parsed.device_count = header.size() - 9;

  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> f = split_csv_line(line, lineno);
    if (f.size() != header.size())
      throw io::ConfigError("csv: wrong field count on line " + std::to_string(lineno));
    SweepRow row;
    row.parameter = f[0];
    row.value = *parse_opt(f[1], lineno);
    row.allocator = f[2];
    row.repetition = static_cast<int>(*parse_opt(f[3], lineno));
    row.status = f[4];
    row.objective = parse_opt(f[5], lineno);
    row.energy = parse_opt(f[6], lineno);
    row.privacy = parse_opt(f[7], lineno);
    row.millis = *parse_opt(f[8], lineno);
    row.lambda.resize(parsed.device_count);
    for (std::size_t i = 0; i < parsed.device_count; ++i)
      row.lambda[i] = parse_opt(f[9 + i], lineno);
    parsed.rows.push_back(std::move(row));
  }
  return parsed;
}

ParsedSweep read_rows_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io::ConfigError("csv: cannot open " + path);
  return read_rows_csv(in);
}

}  // namespace privtuner::sweep
