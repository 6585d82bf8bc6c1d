#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "privtuner/scenario_io.hpp"
#include "privtuner/svg_chart.hpp"
#include "privtuner/sweep.hpp"
#include "testutil.hpp"

using namespace privtuner;

namespace {

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("scenario generation") {
  const Scenario scn = io::generate_scenario(1, io::GenerateParams{});

  SUBCASE("default parameters match the experiment settings") {
    CHECK(scn.device_count() == 10);
    CHECK(scn.f_total == 10e9);
    CHECK(scn.b_total == 10e6);
    CHECK(scn.kappa == 1e-28);
    CHECK(scn.t_max_device == 4000.0);
    CHECK(scn.t_max_server == 5000.0);
    CHECK(scn.omega == 1.0);
    CHECK(scn.noise_density == doctest::Approx(std::pow(10.0, -20.4)).epsilon(1e-12));
    REQUIRE(scn.lambda_options.size() == 3);
    CHECK(scn.lambda_options[0] == 4096.0);
    CHECK(scn.lambda_options[1] == 8192.0);
    CHECK(scn.lambda_options[2] == 16384.0);
    bool saw10 = false, saw5 = false, saw1 = false;
    for (const DeviceProfile& dev : scn.devices) {
      CHECK(dev.samples == 10.0);
      CHECK(dev.params_per_sample == 1e4);
      CHECK(dev.additions_per_sample == 1e5);
      CHECK(dev.multiplications_per_sample == 1e6);
      CHECK(dev.other_cycles == 1e9);
      CHECK(dev.tx_data_bits == 3e9);
      CHECK(dev.g_max == 3e9);
      CHECK(dev.p_max == doctest::Approx(0.1).epsilon(1e-12));
      saw10 = saw10 || dev.privacy_weight == 10.0;
      saw5 = saw5 || dev.privacy_weight == 5.0;
      saw1 = saw1 || dev.privacy_weight == 1.0;
    }
    CHECK(saw10);
    CHECK(saw5);
    CHECK(saw1);
  }

  SUBCASE("same seed gives identical bytes, different seeds differ") {
    std::ostringstream a, b, c;
    io::write_scenario(io::generate_scenario(7, {}), a);
    io::write_scenario(io::generate_scenario(7, {}), b);
    io::write_scenario(io::generate_scenario(8, {}), c);
    CHECK(a.str() == b.str());
    CHECK(a.str() != c.str());
  }

  SUBCASE("dBm conversion") {
    CHECK(io::dbm_to_watts(20.0) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(io::dbm_to_watts(30.0) == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("bad parameter ranges are refused") {
    io::GenerateParams params;
    params.devices = 0;
    CHECK_THROWS_AS(io::generate_scenario(1, params), io::ConfigError);
    params = {};
    params.min_distance_km = -0.1;
    CHECK_THROWS_AS(io::generate_scenario(1, params), io::ConfigError);
  }
}

TEST_CASE("scenario round trip") {
  const Scenario scn = io::generate_scenario(3, io::GenerateParams{});
  std::ostringstream first;
  io::write_scenario(scn, first);
  std::istringstream in(first.str());
  const Scenario back = io::read_scenario(in);
  std::ostringstream second;
  io::write_scenario(back, second);
  CHECK(first.str() == second.str());
  CHECK(back.devices[4].channel_gain == scn.devices[4].channel_gain);
  CHECK(back.fit.c8 == scn.fit.c8);

  SUBCASE("parse errors") {
    std::istringstream missing("f_total 1e9\n");
    CHECK_THROWS_AS(io::read_scenario(missing), io::ConfigError);
    std::istringstream unknown("schema_version 1\nnot_a_key 5\n");
    CHECK_THROWS_AS(io::read_scenario(unknown), io::ConfigError);
    std::istringstream unterminated("schema_version 1\ndevice\n  samples 10\n");
    CHECK_THROWS_AS(io::read_scenario(unterminated), io::ConfigError);
  }
}

TEST_CASE("sweep config") {
  sweep::SweepConfig cfg;
  cfg.parameter = "b_total";
  cfg.values = {5e6, 10e6};
  cfg.allocators = {"proposed", "average"};
  cfg.repetitions = 2;
  cfg.seed = 5;

  SUBCASE("round trip") {
    std::ostringstream out;
    sweep::write_sweep_config(cfg, out);
    std::istringstream in(out.str());
    const sweep::SweepConfig back = sweep::read_sweep_config(in);
    CHECK(back.parameter == cfg.parameter);
    CHECK(back.values == cfg.values);
    CHECK(back.allocators == cfg.allocators);
    CHECK(back.repetitions == cfg.repetitions);
    CHECK(back.seed == cfg.seed);
  }

  SUBCASE("validation") {
    sweep::SweepConfig bad = cfg;
    bad.allocators = {};
    CHECK_THROWS_AS(bad.validate(), io::ConfigError);
    bad = cfg;
    bad.parameter = "bandwidth";
    CHECK_THROWS_AS(bad.validate(), io::ConfigError);
    bad = cfg;
    bad.allocators = {"proposed", "magic"};
    CHECK_THROWS_AS(bad.validate(), io::ConfigError);
    bad = cfg;
    bad.repetitions = 0;
    CHECK_THROWS_AS(bad.validate(), io::ConfigError);
  }

  SUBCASE("apply parameter") {
    const Scenario scn = testutil::default_scenario();
    const Scenario swept = sweep::apply_parameter(scn, "p_max", 0.2);
    for (const DeviceProfile& dev : swept.devices) CHECK(dev.p_max == 0.2);
    const Scenario omega = sweep::apply_parameter(scn, "omega", 4.0);
    CHECK(omega.omega == 4.0);
  }
}

TEST_CASE("sweep rows and csv round trip") {
  Scenario scn = io::generate_scenario(2, io::GenerateParams{});
  scn.omega = 0.0;
  sweep::SweepConfig cfg;
  cfg.parameter = "b_total";
  cfg.values = {8e6, 12e6};
  cfg.allocators = {"average", "compute_only"};
  cfg.repetitions = 1;

  const std::vector<sweep::SweepRow> rows = sweep::run_sweep_serial(scn, cfg, {});
  REQUIRE(rows.size() == 4);
  for (const sweep::SweepRow& row : rows) {
    CHECK((row.status == "ok" || row.status == "infeasible"));
    if (row.ok()) {
      CHECK(row.energy.has_value());
      CHECK(row.lambda[0].has_value());
    }
  }

  std::ostringstream out;
  sweep::write_rows_csv(rows, scn.device_count(), out);
  std::istringstream in(out.str());
  const sweep::ParsedSweep parsed = sweep::read_rows_csv(in);
  CHECK(parsed.device_count == scn.device_count());
  REQUIRE(parsed.rows.size() == rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    CHECK(parsed.rows[k].parameter == rows[k].parameter);
    CHECK(parsed.rows[k].value == rows[k].value);
    CHECK(parsed.rows[k].allocator == rows[k].allocator);
    CHECK(parsed.rows[k].status == rows[k].status);
    CHECK(parsed.rows[k].objective == rows[k].objective);
    CHECK(parsed.rows[k].energy == rows[k].energy);
    CHECK(parsed.rows[k].privacy == rows[k].privacy);
    CHECK(parsed.rows[k].millis == rows[k].millis);
    for (std::size_t i = 0; i < parsed.device_count; ++i)
      CHECK(parsed.rows[k].lambda[i] == rows[k].lambda[i]);
  }

  SUBCASE("repetitions past the first re-draw the channels") {
    sweep::SweepConfig reps = cfg;
    reps.values = {10e6};
    reps.allocators = {"average"};
    reps.repetitions = 3;
    reps.seed = 11;
    const std::vector<sweep::SweepRow> r = sweep::run_sweep_serial(scn, reps, {});
    REQUIRE(r.size() == 3);
    REQUIRE(r[0].ok());
    REQUIRE(r[1].ok());
    CHECK(*r[0].energy != *r[1].energy);
    CHECK(*r[1].energy != *r[2].energy);
  }

  SUBCASE("csv parse errors") {
    std::istringstream empty("");
    CHECK_THROWS_AS(sweep::read_rows_csv(empty), io::ConfigError);
    std::istringstream bad_header("foo,bar\r\n");
    CHECK_THROWS_AS(sweep::read_rows_csv(bad_header), io::ConfigError);
  }
}

TEST_CASE("svg rendering") {
  const std::filesystem::path golden = std::filesystem::path(TEST_DATA_DIR);
  const std::filesystem::path tmp = std::filesystem::temp_directory_path() / "privtuner_svg";
  std::filesystem::remove_all(tmp);

  SUBCASE("golden bytes for the fixture csv") {
    const sweep::ParsedSweep parsed =
        sweep::read_rows_csv_file((golden / "sweep_fixture.csv").string());
    const std::vector<std::string> files =
        svg::render_plots(parsed.rows, tmp.string(), "fixture");
    REQUIRE(files.size() == 3);
    CHECK(slurp(tmp / "fixture_energy.svg") == slurp(golden / "fixture_energy.svg"));
  }

  SUBCASE("deterministic output bytes") {
    const sweep::ParsedSweep parsed =
        sweep::read_rows_csv_file((golden / "sweep_fixture.csv").string());
    svg::render_plots(parsed.rows, (tmp / "a").string(), "x");
    svg::render_plots(parsed.rows, (tmp / "b").string(), "x");
    CHECK(slurp(tmp / "a" / "x_energy.svg") == slurp(tmp / "b" / "x_energy.svg"));
    CHECK(slurp(tmp / "a" / "x_objective.svg") == slurp(tmp / "b" / "x_objective.svg"));
  }

  SUBCASE("no plottable rows is an error") {
    std::vector<sweep::SweepRow> rows;
    CHECK_THROWS_AS(svg::render_plots(rows, tmp.string(), "x"), io::ConfigError);
    sweep::SweepRow row;
    row.parameter = "b_total";
    row.value = 1.0;
    row.allocator = "average";
    row.status = "infeasible";
    rows.push_back(row);
    CHECK_THROWS_AS(svg::render_plots(rows, tmp.string(), "x"), io::ConfigError);
  }
}
