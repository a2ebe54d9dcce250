#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "rismp/scenario.hpp"

using namespace rismp;

TEST_CASE("default scenario is valid and matches the documented shape") {
  const ScenarioConfig cfg = default_scenario();
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.rician_factor_h == 1.0);
  CHECK(cfg.bandwidth_hz[0] == 240e6);
  CHECK(cfg.num_ris() == 3);
  for (int e : cfg.elements_per_ris) CHECK(e == 64);
  // Catalog mirrors the four bundled model sizes in bytes.
  CHECK(cfg.car_catalogs[0].count() == 4);
  CHECK(cfg.car_catalogs[0].size_bits(1) == 280e3 * 8);
  CHECK(cfg.car_catalogs[0].size_bits(2) == 2.3e6 * 8);
  CHECK(cfg.car_catalogs[0].size_bits(3) == 4.1e6 * 8);
  CHECK(cfg.car_catalogs[0].size_bits(4) == 6.2e6 * 8);
}

TEST_CASE("zero local cars fails validation") {
  ScenarioConfig cfg = default_scenario();
  cfg.tx_positions.clear();
  cfg.bandwidth_hz.clear();
  cfg.tx_power_w.clear();
  cfg.car_catalogs.clear();
  cfg.weights = {1.0, 1.0};
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
}

TEST_CASE("invariant violations are named") {
  ScenarioConfig cfg = default_scenario();
  cfg.weights = {1.0, 1.0, 1.0};  // M+2 = 4 required
  CHECK_THROWS_WITH_AS(cfg.validate(),
                       doctest::Contains("M+2"), ValidationError);

  cfg = default_scenario();
  cfg.car_catalogs[0].entries[2].size_bits = cfg.car_catalogs[0].entries[1].size_bits;
  CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("strictly increasing"),
                       ValidationError);

  cfg = default_scenario();
  cfg.t_max_s = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
}

TEST_CASE("size suffix parsing") {
  CHECK(parse_size_bits("280KB") == 280e3 * 8);
  CHECK(parse_size_bits("2.3MB") == doctest::Approx(2.3e6 * 8));
  CHECK(parse_size_bits("18.4Mb") == doctest::Approx(18.4e6));
  CHECK(parse_size_bits("64") == 64.0);
  CHECK(parse_size_bits("12B") == 96.0);
  CHECK_THROWS_AS(parse_size_bits("12XB"), ParseError);
  CHECK_THROWS_AS(parse_size_bits("junk"), ParseError);
}

TEST_CASE("save/load round trip is the identity") {
  const ScenarioConfig cfg = default_scenario();
  const std::string path =
      (std::filesystem::temp_directory_path() / "rismp_roundtrip.json").string();
  save_scenario(cfg, path);
  const ScenarioConfig loaded = load_scenario(path);
  CHECK(loaded == cfg);
  std::remove(path.c_str());
}

TEST_CASE("load errors distinguish parse and validation") {
  CHECK_THROWS_AS(scenario_from_json_text("{not json"), ParseError);
  ScenarioConfig bad = default_scenario();
  bad.noise_power_w = -1;
  CHECK_THROWS_AS(scenario_from_json_text(scenario_to_json_text(bad)),
                  ValidationError);
  CHECK_THROWS_AS(load_scenario("/nonexistent/path.json"), ParseError);
}

TEST_CASE("segment distances: collinear single RIS") {
  ScenarioConfig cfg = default_scenario();
  cfg.tx_positions = {{0, 0, 0}};
  cfg.rx_position = {60, 0, 0};
  cfg.ris_positions = {{30, 0, 0}};
  cfg.elements_per_ris = {64};
  cfg.bandwidth_hz = {240e6};
  cfg.tx_power_w = {0.1995};
  cfg.weights = {1, 1, 1};
  cfg.car_catalogs = {cfg.car_catalogs[0]};
  const auto d = segment_distances(cfg);
  REQUIRE(d.size() == 1);
  REQUIRE(d[0].size() == 2);
  CHECK(d[0][0] == doctest::Approx(30.0));
  CHECK(d[0][1] == doctest::Approx(30.0));
}

TEST_CASE("segment distances: stacked RIS vertical offset") {
  ScenarioConfig cfg = default_scenario();
  cfg.ris_positions = {{30, 0, 30}, {30, 0, 50}};
  cfg.elements_per_ris = {64, 64};
  const auto d = segment_distances(cfg);
  for (const auto& per_car : d) {
    REQUIRE(per_car.size() == 3);
    CHECK(per_car[1] == doctest::Approx(20.0));
    for (double seg : per_car) CHECK(seg > 0);
  }
}

TEST_CASE("segment distances: coincident positions error") {
  ScenarioConfig cfg = default_scenario();
  cfg.rx_position = cfg.ris_positions.back();
  CHECK_THROWS_AS(segment_distances(cfg), ValidationError);
}

TEST_CASE("path loss amplitude") {
  ScenarioConfig cfg = default_scenario();
  cfg.path_loss_exponent = 2.0;

  SUBCASE("reference point at 1 m") {
    CHECK(path_loss_amplitude(1.0, cfg) ==
          doctest::Approx(std::pow(10.0, -cfg.reference_loss_db / 20.0)));
  }
  SUBCASE("doubling distance halves amplitude at alpha=2") {
    CHECK(path_loss_amplitude(20.0, cfg) ==
          doctest::Approx(0.5 * path_loss_amplitude(10.0, cfg)));
  }
  SUBCASE("unit reference loss evaluates to 1/d") {
    cfg.reference_loss_db = 0.0;
    CHECK(path_loss_amplitude(30.0, cfg) == doctest::Approx(1.0 / 30.0));
  }
  SUBCASE("strictly decreasing in d") {
    double prev = path_loss_amplitude(0.5, cfg);
    for (double d = 1.0; d < 300.0; d *= 1.7) {
      const double cur = path_loss_amplitude(d, cfg);
      CHECK(cur < prev);
      prev = cur;
    }
  }
  SUBCASE("nonpositive distance is an error") {
    CHECK_THROWS_AS(path_loss_amplitude(0.0, cfg), ValidationError);
    CHECK_THROWS_AS(path_loss_amplitude(-3.0, cfg), ValidationError);
  }
}

TEST_CASE("sweep-axis scenario builders keep configs valid") {
  const ScenarioConfig base = default_scenario();
  for (int n = 1; n <= 5; ++n) {
    const ScenarioConfig cfg = with_hop_count(base, n);
    CHECK(cfg.num_ris() == n);
    CHECK_NOTHROW(cfg.validate());
    CHECK_NOTHROW(segment_distances(cfg));
  }
  for (int e : {36, 49, 64, 81}) {
    const ScenarioConfig cfg = with_elements(base, e);
    for (int got : cfg.elements_per_ris) CHECK(got == e);
  }
  for (double az : {30.0, 45.0, 60.0, 75.0}) {
    const ScenarioConfig cfg = with_azimuth(base, az);
    CHECK(cfg.num_ris() == 1);
    CHECK_NOTHROW(segment_distances(cfg));
  }
  for (double v : {15.0, 20.0, 25.0, 30.0}) {
    const ScenarioConfig cfg = with_vertical_offset(base, v);
    CHECK(cfg.ris_positions[1].z() ==
          doctest::Approx(cfg.ris_positions[0].z() + v));
  }
}

TEST_CASE("azimuth layout lengthens the reflected path as the angle grows") {
  const ScenarioConfig base = default_scenario();
  double prev_total = 0;
  bool first = true;
  for (double az : {30.0, 45.0, 60.0, 75.0}) {
    const auto d = segment_distances(with_azimuth(base, az));
    const double total = d[0][0] + d[0][1];
    if (!first) CHECK(total > prev_total);
    prev_total = total;
    first = false;
  }
}
