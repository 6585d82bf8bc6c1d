#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "privtuner/joint.hpp"
#include "privtuner/model.hpp"
#include "privtuner/scenario_io.hpp"

namespace privtuner::sweep {

inline const std::vector<std::string> kSweepParameters = {
    "b_total", "p_max", "f_total", "g_max", "t_max_device", "t_max_server", "omega"};
inline const std::vector<std::string> kAllocators = {"proposed", "average", "compute_only",
                                                     "radio_only"};

struct SweepConfig {
  std::string parameter;
  std::vector<double> values;
  std::vector<std::string> allocators;
  int repetitions = 1;
  std::uint64_t seed = 0;

  void validate() const; // throws io::ConfigError
};

// Same key-value text format as scenario files.
SweepConfig read_sweep_config(std::istream& in);
SweepConfig read_sweep_config_file(const std::string& path);
void write_sweep_config(const SweepConfig& cfg, std::ostream& out);

struct SweepRow {
  std::string parameter;
  double value = 0.0;
  std::string allocator;
  int repetition = 0;
  std::string status; // "ok" or "infeasible"
  std::optional<double> objective;
  std::optional<double> energy;
  std::optional<double> privacy;
  std::vector<std::optional<double>> lambda; // per device
  double millis = 0.0;

  bool ok() const { return status == "ok"; }
};

// Copy of the scenario with one swept field overridden; p_max and g_max
// apply per device.
Scenario apply_parameter(const Scenario& scn, const std::string& parameter, double value);

// One row per value x allocator x repetition, in that order. Repetitions
// beyond the first re-draw channel shadowing from the config seed; the draw
// depends only on (seed, repetition, device) so every allocator and sweep
// value sees the same channels. Points that cannot be solved come back as
// status=infeasible rows.
std::vector<SweepRow> run_sweep(const Scenario& scn, const SweepConfig& cfg,
                                const joint::SolveOptions& opts);
std::vector<SweepRow> run_sweep_serial(const Scenario& scn, const SweepConfig& cfg,
                                       const joint::SolveOptions& opts);

// RFC-4180 CSV with a header row; doubles carry 17 significant digits so
// parsing the file back reproduces the rows exactly.
void write_rows_csv(const std::vector<SweepRow>& rows, std::size_t device_count,
                    std::ostream& out);
void write_rows_csv_file(const std::vector<SweepRow>& rows, std::size_t device_count,
                         const std::string& path);

struct ParsedSweep {
  std::vector<SweepRow> rows;
  std::size_t device_count = 0;
};
ParsedSweep read_rows_csv(std::istream& in);
ParsedSweep read_rows_csv_file(const std::string& path);

}  // namespace privtuner::sweep
