#include <doctest.h>

#include <cmath>
#include <sstream>

#include "privtuner/joint.hpp"
#include "privtuner/oracle.hpp"
#include "testutil.hpp"

using namespace privtuner;

TEST_CASE("convergence metric") {
  Allocation a = Allocation::zeros(2);
  a.f = {1e9, 2e9};
  a.g = {1e9, 1e9};
  a.p = {0.05, 0.05};
  a.b = {1e6, 1e6};
  a.lam = {4096.0, 8192.0};

  SUBCASE("identical allocations have zero change") {
    CHECK(joint::convergence_metric(a, a) == 0.0);
  }
  SUBCASE("doubling a unit variable gives one") {
    Allocation b = a;
    b.p[0] = 1.0;
    Allocation base = a;
    base.p[0] = 1.0;
    Allocation doubled = base;
    doubled.p[0] = 2.0;
    CHECK(joint::convergence_metric(base, doubled) == doctest::Approx(1.0));
  }
  SUBCASE("tiny perturbations stay below any practical tolerance") {
    Allocation b = a;
    for (std::size_t i = 0; i < 2; ++i) b.f[i] *= 1.0 + 1e-9;
    CHECK(joint::convergence_metric(a, b) < 1e-6);
  }
  SUBCASE("dimension mismatch is rejected") {
    Allocation b = Allocation::zeros(3);
    CHECK_THROWS_AS(joint::convergence_metric(a, b), std::invalid_argument);
  }
}

TEST_CASE("solve options validation") {
  joint::SolveOptions opts;
  opts.max_outer = 0;
  CHECK_THROWS_AS(opts.validate(), std::invalid_argument);
  opts.max_outer = 5;
  opts.eps = 1.5;
  CHECK_THROWS_AS(opts.validate(), std::invalid_argument);
}

TEST_CASE("joint solve") {
  SUBCASE("omega zero with loose budgets settles on the smallest option") {
    Scenario scn = testutil::default_scenario();
    scn.omega = 0.0;
    const joint::SolveResult res = joint::solve(scn, {});
    for (double lam : res.allocation.lam) CHECK(lam == scn.lambda_options.front());
    CHECK(check_feasibility(scn, res.allocation).feasible);
  }

  SUBCASE("an overwhelming privacy weight pushes every device to its cap") {
    std::uint64_t seed = 50;
    const Scenario base = testutil::feasible_random_scenario(seed, 2, false);
    Scenario scn = base;
    scn.omega = 1e6;
    scn.f_total = 1e14; // keep the server budget slack so only (28b) limits lambda
    const joint::SolveResult res = joint::solve(scn, {});

    // exhaustive check: no option above the chosen one stays feasible
    const std::vector<double> t_tr = [&] {
      std::vector<double> t(scn.device_count());
      for (std::size_t i = 0; i < t.size(); ++i) {
        const double r = shannon_rate(res.allocation.b[i], res.allocation.p[i],
                                      scn.devices[i].channel_gain, scn.noise_density);
        t[i] = scn.devices[i].tx_data_bits / r;
      }
      return t;
    }();
    const auto oracle = testutil::enumerate_stage1(scn, t_tr);
    REQUIRE(oracle.has_value());
    for (std::size_t i = 0; i < scn.device_count(); ++i)
      CHECK(res.allocation.lam[i] == oracle->lam[i]);
  }

  SUBCASE("objective trace is non-increasing and the result is feasible") {
    std::uint64_t seed = 60;
    for (int trial = 0; trial < 10; ++trial) {
      const Scenario scn = testutil::feasible_random_scenario(seed, 3, true);
      const joint::SolveResult res = joint::solve(scn, {});
      REQUIRE(!res.trace.iterations.empty());
      for (std::size_t k = 1; k < res.trace.iterations.size(); ++k)
        CHECK(res.trace.iterations[k].objective <= res.trace.iterations[k - 1].objective);
      CHECK(check_feasibility(scn, res.allocation).feasible);
    }
  }

  SUBCASE("identical scenario and options give a bit-identical trace") {
    std::uint64_t seed = 70;
    const Scenario scn = testutil::feasible_random_scenario(seed, 4, true);
    const joint::SolveResult a = joint::solve(scn, {});
    const joint::SolveResult b = joint::solve(scn, {});
    REQUIRE(a.trace.iterations.size() == b.trace.iterations.size());
    for (std::size_t k = 0; k < a.trace.iterations.size(); ++k) {
      CHECK(a.trace.iterations[k].objective == b.trace.iterations[k].objective);
      for (std::size_t i = 0; i < scn.device_count(); ++i) {
        CHECK(a.trace.iterations[k].allocation.p[i] == b.trace.iterations[k].allocation.p[i]);
        CHECK(a.trace.iterations[k].allocation.b[i] == b.trace.iterations[k].allocation.b[i]);
        CHECK(a.trace.iterations[k].allocation.f[i] == b.trace.iterations[k].allocation.f[i]);
        CHECK(a.trace.iterations[k].allocation.g[i] == b.trace.iterations[k].allocation.g[i]);
        CHECK(a.trace.iterations[k].allocation.lam[i] ==
              b.trace.iterations[k].allocation.lam[i]);
      }
    }
  }

  SUBCASE("close to the dense grid on small scenarios") {
    std::uint64_t seed = 80;
    for (int trial = 0; trial < 3; ++trial) {
      Scenario scn = testutil::feasible_random_scenario(seed, 2, false);
      scn.omega = 0.0;
      const joint::SolveResult res = joint::solve(scn, {});
      oracle::GridSpec grid;
      grid.points_per_axis = 31;
      const auto best = oracle::grid_search(scn, grid);
      REQUIRE(best.has_value());
      CHECK(res.objective <= best->objective + 0.05 * std::fabs(best->objective));
    }
  }

  SUBCASE("the server-deadline rate floor variant still yields feasible output") {
    Scenario scn = testutil::default_scenario();
    scn.rmin_deadline = RminDeadline::Server;
    const joint::SolveResult res = joint::solve(scn, {});
    CHECK(check_feasibility(scn, res.allocation).feasible);
  }

  SUBCASE("infeasible scenarios name the violated constraint") {
    Scenario scn = testutil::default_scenario();
    scn.f_total = 1e6;
    try {
      joint::solve(scn, {});
      FAIL("expected InfeasibleError");
    } catch (const InfeasibleError& e) {
      CHECK(std::string(e.what()).find("server") != std::string::npos);
    }
  }
}
