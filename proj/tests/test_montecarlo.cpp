#include <sstream>

#include <catch2/catch_amalgamated.hpp>

#include "noma/montecarlo.hpp"

using namespace noma;

namespace {

ScenarioConfig small_scenario() {
  ScenarioConfig cfg;
  cfg.n_users = {8};
  cfg.r_min_bps = {1e6};
  cfg.schemes = {parse_scheme("SC-NOMA"), parse_scheme("FD-NOMA(2)"),
                 parse_scheme("FDMA")};
  cfg.n_realizations = 20;
  cfg.rng_seed = 11;
  return cfg;
}

}  // namespace

TEST_CASE("parse_scheme") {
  CHECK(parse_scheme("SC-NOMA").u_max == 0);
  CHECK(parse_scheme("FDMA").u_max == 1);
  CHECK(parse_scheme("FD-NOMA(4)").u_max == 4);
  CHECK_THROWS_AS(parse_scheme("TDMA"), std::invalid_argument);
  CHECK_THROWS_AS(parse_scheme("FD-NOMA(0)"), std::invalid_argument);
}

TEST_CASE("run_monte_carlo is deterministic") {
  auto cfg = small_scenario();
  auto a = run_monte_carlo(cfg);
  auto b = run_monte_carlo(cfg);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].outage == b[i].outage);
    CHECK(a[i].avg_sum_rate_bps == b[i].avg_sum_rate_bps);
    CHECK(a[i].avg_ee == b[i].avg_ee);
    CHECK(a[i].avg_min_power_w == b[i].avg_min_power_w);
  }
}

TEST_CASE("worker count does not change the metrics") {
  auto cfg = small_scenario();
  cfg.n_workers = 1;
  auto serial = run_monte_carlo(cfg);
  cfg.n_workers = 8;
  auto parallel = run_monte_carlo(cfg);
  std::ostringstream a, b;
  write_csv(serial, a);
  write_csv(parallel, b);
  CHECK(a.str() == b.str());
}

TEST_CASE("zero demand never causes outage") {
  auto cfg = small_scenario();
  cfg.r_min_bps = {0.0};
  for (const auto& row : run_monte_carlo(cfg)) {
    CHECK(row.outage == 0.0);
    CHECK(row.n_feasible == cfg.n_realizations);
  }
}

TEST_CASE("scheme nesting per realization") {
  auto cfg = small_scenario();
  const int k = cfg.n_users[0];
  for (int r = 0; r < 10; ++r) {
    const auto gains =
        generate_realization(cfg.channel, k, cfg.rng_seed, static_cast<uint64_t>(r));
    const auto sc = detail::evaluate_scheme(cfg, k, cfg.r_min_bps[0],
                                            cfg.schemes[0], gains);
    const auto fd = detail::evaluate_scheme(cfg, k, cfg.r_min_bps[0],
                                            cfg.schemes[1], gains);
    const auto fdma = detail::evaluate_scheme(cfg, k, cfg.r_min_bps[0],
                                              cfg.schemes[2], gains);
    if (sc.feasible && fd.feasible && fdma.feasible) {
      CHECK(sc.sum_rate_bps >= fd.sum_rate_bps * (1.0 - 1e-9));
      CHECK(fd.sum_rate_bps >= fdma.sum_rate_bps * (1.0 - 1e-9));
      CHECK(sc.min_power_w <= fd.min_power_w * (1.0 + 1e-9));
      CHECK(fd.min_power_w <= fdma.min_power_w * (1.0 + 1e-9));
    }
    // Feasibility itself nests the same way.
    if (fdma.feasible) CHECK(fd.feasible);
    if (fd.feasible) CHECK(sc.feasible);
  }
}

TEST_CASE("csv format") {
  MetricsRow row;
  row.scheme = "FDMA";
  row.k = 8;
  row.r_min_bps = 1e6;
  row.outage = 0.25;
  row.avg_min_power_w = 1.5;
  row.avg_sum_rate_bps = 2e7;
  row.avg_ee = 3.5e5;
  row.n_feasible = 15;
  std::ostringstream os;
  write_csv({row}, os);
  CHECK(os.str() ==
        "scheme,K,r_min_bps,outage,avg_min_power_w,avg_sum_rate_bps,avg_ee,"
        "n_feasible\nFDMA,8,1000000,0.25,1.5,20000000,350000,15\n");
}

TEST_CASE("config validation") {
  ScenarioConfig cfg = small_scenario();
  cfg.n_realizations = 0;
  CHECK_THROWS_AS(run_monte_carlo(cfg), std::invalid_argument);
  cfg = small_scenario();
  cfg.schemes.clear();
  CHECK_THROWS_AS(run_monte_carlo(cfg), std::invalid_argument);
}
