#include <doctest.h>

#include <stdexcept>

#include "lbtsim/results.hpp"
#include "lbtsim/scenario.hpp"

using namespace lbtsim;

TEST_CASE("a minimal warehouse scenario takes the documented defaults") {
  const Scenario sc = parse_scenario(R"({"kind": "warehouse"})", "test");
  CHECK(sc.kind == Scenario::Kind::Warehouse);
  CHECK(sc.warehouse.n_nodes == 38);
  CHECK(sc.warehouse.poll_count == 10);
  CHECK(sc.warehouse.window_us == 11'750'000);
  CHECK(sc.warehouse.mac.t_fixed_us == 5'000);
  CHECK(sc.warehouse.radio.bit_rate == 38'400);
  CHECK(sc.warehouse.energy.i_rx_ua == 23'000);
}

TEST_CASE("full warehouse scenario round-trip") {
  const char* text = R"({
    "kind": "warehouse",
    "nodes": 10,
    "n_active": 4,
    "product_id": 3,
    "polls": {"count": 5, "first_offset_us": 250000, "spacing_us": 400000},
    "window_us": 4000000,
    "mode": "lbt",
    "tps_policy": "retain",
    "payloads": {"poll": 4, "reply": 6, "start_stop": 2, "unicast": 8},
    "radio": {"extended_preamble_us": 4700},
    "mac": {"t_ps_max_us": 3000},
    "unicast": {"timeout_us": 50000, "retries": 2},
    "energy": {"supply_mv": 3000, "i_tx_ua": 30000}
  })";
  const Scenario sc = parse_scenario(text, "test");
  CHECK(sc.warehouse.n_nodes == 10);
  CHECK(sc.warehouse.n_active == 4);
  CHECK(sc.warehouse.mac.tps_policy == TpsPolicy::RetainPerPacket);
  CHECK(sc.warehouse.mac.t_ps_max_us == 3'000);
  CHECK(sc.warehouse.radio.extended_preamble_us == 4'700);
  CHECK(sc.warehouse.payloads.reply == 6);
  CHECK(sc.warehouse.unicast_retries == 2);
  CHECK(sc.warehouse.energy.i_tx_ua == 30'000);
}

TEST_CASE("unknown keys are configuration errors, with the key named") {
  try {
    parse_scenario(R"({"kind": "warehouse", "nodse": 10})", "test");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("nodse") != std::string::npos);
  }
}

TEST_CASE("nested unknown keys are caught too") {
  CHECK_THROWS_AS(parse_scenario(R"({"kind": "warehouse", "mac": {"t_fix": 1}})", "test"),
                  ConfigError);
}

TEST_CASE("malformed json carries the parser diagnostic") {
  try {
    parse_scenario("{\"kind\": \n \"warehouse\",}", "broken.json");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    CHECK(what.find("broken.json") != std::string::npos);
    CHECK(what.find("parse error") != std::string::npos);
  }
}

TEST_CASE("semantic validation failures are configuration errors") {
  CHECK_THROWS_AS(parse_scenario(R"({"kind": "warehouse", "nodes": 0})", "t"), ConfigError);
  CHECK_THROWS_AS(parse_scenario(R"({"kind": "warehouse", "n_active": 99})", "t"), ConfigError);
  CHECK_THROWS_AS(parse_scenario(R"({"kind": "warehouse", "mode": "csma"})", "t"), ConfigError);
  CHECK_THROWS_AS(
      parse_scenario(R"({"kind": "warehouse", "radio": {"extended_preamble_us": 100}})", "t"),
      ConfigError);
  CHECK_THROWS_AS(parse_scenario(R"({"kind": "sorting"})", "t"), ConfigError);
}

TEST_CASE("poisson scenario parsing") {
  const Scenario sc = parse_scenario(
      R"({"kind": "poisson", "nodes": 12, "offered_load": 0.4, "preamble": "extended"})",
      "test");
  CHECK(sc.kind == Scenario::Kind::Poisson);
  CHECK(sc.poisson.n_nodes == 12);
  CHECK(sc.poisson.offered_load == doctest::Approx(0.4));
  CHECK(sc.poisson.preamble == PreambleMode::Extended);
}

TEST_CASE("energy parameter files parse currents, energies and custom edges") {
  const char* text = R"({
    "supply_mv": 3300,
    "i_rx_ua": 20000,
    "lpl_model": "alternating",
    "i_sleep_ua": 2,
    "e_tran_pj": {"send": 1500, "listen": 700},
    "transitions": [{"from": "TX", "call": "listen", "to": "RX", "e_tran_pj": 9}]
  })";
  const EnergyParams p = parse_energy_params(text, "test");
  CHECK(p.supply_mv == 3'300);
  CHECK(p.i_rx_ua == 20'000);
  CHECK(p.alternating_lpl);
  CHECK(p.i_sleep_ua == 2);
  CHECK(p.e_tran_pj.at(DriverCall::Send) == 1'500);
  CHECK(p.e_tran_pj.at(DriverCall::Listen) == 700);
  REQUIRE(p.custom_edges.size() == 1);
  CHECK(p.custom_edges[0].to == PowerState::Rx);
  CHECK_THROWS_AS(parse_energy_params(R"({"i_rx_au": 1})", "t"), ConfigError);
  CHECK_THROWS_AS(parse_energy_params(R"({"lpl_model": "off"})", "t"), ConfigError);
}

TEST_CASE("csv headers are pinned") {
  CHECK(results_csv({}).rfind("n_active,seed,throughput,n_rx,sum_n_tx,"
                              "energy_mean_mj,energy_std_mj,energy_min_mj,energy_max_mj\n",
                              0) == 0);
  CHECK(aggregate_csv({}).rfind("n_active,runs,t_mean,t_std,energy_mean_mj,energy_std_mj,"
                                "energy_min_mj,energy_max_mj,nrx_mean,ntx_mean\n",
                                0) == 0);
  RunStats s;
  s.n_nodes = 0;
  CHECK(nodes_csv(s, 1).rfind(
            "seed,node,active,n_tx,n_rx_framed,n_rx_raw,polls_rx,energy_pj,energy_mj\n", 0) ==
        0);
  CHECK(aloha_csv_header() == "g_target,seed,g_measured,utilization,attempts,drops\n");
  CHECK(mac_log_csv({}).rfind("time_us,node,event\n", 0) == 0);
}

TEST_CASE("undefined throughput serializes as nan") {
  ResultRow row;
  row.n_active = 1;
  row.seed = 2;
  const std::string csv = results_csv({row});
  CHECK(csv.find("1,2,nan,0,0,") != std::string::npos);
}

TEST_CASE("energy summaries use sample statistics in millijoules") {
  const EnergySummary s = summarize_energy_pj({1'000'000'000, 3'000'000'000});
  CHECK(s.samples == 2);
  CHECK(s.mean_mj == doctest::Approx(2.0));
  CHECK(s.std_mj == doctest::Approx(1.4142135));
  CHECK(s.min_mj == doctest::Approx(1.0));
  CHECK(s.max_mj == doctest::Approx(3.0));
  CHECK(summarize_energy_pj({5'000'000'000}).std_mj == 0.0);
}

TEST_CASE("spearman rank correlation") {
  CHECK(spearman_rho({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
  CHECK(spearman_rho({1, 2, 3, 4}, {9, 7, 5, 3}) == doctest::Approx(-1.0));
  // Monotone but noisy ranks still correlate strongly.
  CHECK(spearman_rho({1, 2, 3, 4, 5, 6}, {6, 5, 4.1, 4.0, 2, 1}) < -0.9);
}
