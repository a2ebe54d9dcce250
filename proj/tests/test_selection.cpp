#include <doctest.h>

#include <cmath>

#include "rismp/rng.hpp"
#include "rismp/selection.hpp"

using namespace rismp;

namespace {

// Enumeration oracle over every (i_1..i_M, i_A) combination, using the same
// tie-break order as the solver: objective, then larger i_A, then
// lexicographically larger car indices.
Selection enumerate_best(const std::vector<double>& rates,
                         const ScenarioConfig& cfg) {
  const int m = cfg.num_cars();
  Selection best;
  bool found = false;

  std::vector<int> idx(static_cast<std::size_t>(m), 1);
  auto total_of = [&](const std::vector<int>& cars, int ia) {
    double t = 0;
    for (int car = 0; car < m; ++car)
      t += cfg.weights[static_cast<std::size_t>(car)] * cars[static_cast<std::size_t>(car)];
    return t + cfg.weights[static_cast<std::size_t>(m)] * ia;
  };

  while (true) {
    for (int ia = 1; ia <= cfg.receiver_catalog.count(); ++ia) {
      const double t_kd =
          kd_time_s(cfg.receiver_catalog, ia, cfg.compute_freq_flops);
      double delay = 0;
      for (int car = 0; car < m; ++car)
        delay = std::max(delay, transmit_delay_s(
                                    cfg.car_catalogs[static_cast<std::size_t>(car)]
                                        .size_bits(idx[static_cast<std::size_t>(car)]),
                                    rates[static_cast<std::size_t>(car)]));
      if (delay + t_kd > cfg.t_max_s) continue;
      const double total = total_of(idx, ia);
      bool better = false;
      if (!found) {
        better = true;
      } else {
        const double best_total = total_of(best.car_indices, best.receiver_index);
        if (total != best_total)
          better = total > best_total;
        else if (ia != best.receiver_index)
          better = ia > best.receiver_index;
        else
          better = idx > best.car_indices;
      }
      if (better) {
        best.car_indices = idx;
        best.receiver_index = ia;
        best.feasible = true;
        best.delay_s = delay;
        best.kd_time_s = t_kd;
        found = true;
      }
    }
    int car = 0;
    while (car < m) {
      if (idx[static_cast<std::size_t>(car)] <
          cfg.car_catalogs[static_cast<std::size_t>(car)].count()) {
        ++idx[static_cast<std::size_t>(car)];
        break;
      }
      idx[static_cast<std::size_t>(car)] = 1;
      ++car;
    }
    if (car == m) break;
  }
  if (!found) best.feasible = false;
  return best;
}

ModelCatalog random_catalog(RandomStream& rs, int count) {
  ModelCatalog cat;
  double size = 1e5 * (1.0 + rs.uniform());
  for (int i = 1; i <= count; ++i) {
    size *= 1.5 + 2.0 * rs.uniform();
    cat.entries.push_back({i, size, 1e9 * i * (0.5 + rs.uniform()), "m" + std::to_string(i)});
  }
  return cat;
}

ScenarioConfig random_selection_scenario(std::uint64_t seed, int cars,
                                         int max_models) {
  RandomStream rs(stream_key(seed, 616));
  ScenarioConfig cfg = default_scenario();
  cfg.tx_positions.assign(static_cast<std::size_t>(cars), {0, 0, 20});
  for (int c = 0; c < cars; ++c)
    cfg.tx_positions[static_cast<std::size_t>(c)].y() = 3.0 * c;
  cfg.bandwidth_hz.assign(static_cast<std::size_t>(cars), 240e6);
  cfg.tx_power_w.assign(static_cast<std::size_t>(cars), 0.2);
  cfg.weights.clear();
  for (int w = 0; w < cars + 2; ++w) cfg.weights.push_back(rs.uniform(0.0, 2.0));
  cfg.car_catalogs.clear();
  for (int c = 0; c < cars; ++c)
    cfg.car_catalogs.push_back(
        random_catalog(rs, 1 + static_cast<int>(rs.uniform_index(max_models))));
  cfg.receiver_catalog =
      random_catalog(rs, 1 + static_cast<int>(rs.uniform_index(max_models)));
  cfg.t_max_s = 0.3 + 3.0 * rs.uniform();
  cfg.compute_freq_flops = 1e10;
  return cfg;
}

std::vector<double> random_rates(std::uint64_t seed, int cars) {
  RandomStream rs(stream_key(seed, 717));
  std::vector<double> rates;
  for (int c = 0; c < cars; ++c) {
    const double r = rs.uniform();
    if (r < 0.1)
      rates.push_back(0.0);  // blocked link
    else
      rates.push_back(std::pow(10.0, 4.0 + 5.0 * rs.uniform()));
  }
  return rates;
}

}  // namespace

TEST_CASE("kd_time is the flop ratio") {
  ModelCatalog cat;
  cat.entries = {{1, 8.0, 1e9, "a"}, {2, 16.0, 2.5e9, "b"}};
  CHECK(kd_time_s(cat, 1, 1e9) == doctest::Approx(1.0));
  CHECK(kd_time_s(cat, 2, 1e9) == doctest::Approx(2.5));
  CHECK(kd_time_s(cat, 2, 1e9) > kd_time_s(cat, 1, 1e9));
  cat.entries[0].kd_flops = 0.0;
  CHECK(kd_time_s(cat, 1, 1e9) == 0.0);
  CHECK_THROWS_AS(kd_time_s(cat, 3, 1e9), ValidationError);
}

TEST_CASE("abundant rate selects the largest models everywhere") {
  const ScenarioConfig cfg = default_scenario();
  const std::vector<double> rates = {1e12, 1e12};
  const Selection sel = select_models(rates, cfg);
  CHECK(sel.feasible);
  CHECK(sel.car_indices == std::vector<int>{4, 4});
  CHECK(sel.receiver_index == 4);
  CHECK(sel.delay_s < 1e-3);
}

TEST_CASE("degraded rates fall back to the smallest transmit models") {
  const ScenarioConfig cfg = default_scenario();
  // Enough for model 1 within the budget, nowhere near enough for model 2.
  const std::vector<double> rates = {1.5e6, 1.5e6};
  const Selection sel = select_models(rates, cfg);
  CHECK(sel.feasible);
  CHECK(sel.car_indices == std::vector<int>{1, 1});
  CHECK(sel.receiver_index == 4);  // KD budget still allows the largest student
}

TEST_CASE("no feasible combination returns diagnostics instead of throwing") {
  ScenarioConfig cfg = default_scenario();
  cfg.t_max_s = 1.0;
  const std::vector<double> rates = {10.0, 10.0};  // hopeless links
  const Selection sel = select_models(rates, cfg);
  CHECK_FALSE(sel.feasible);
  CHECK(sel.car_indices == std::vector<int>{1, 1});
  CHECK(sel.delay_s + sel.kd_time_s > cfg.t_max_s);
  CHECK_THROWS_AS(p1_objective(sel, rates, cfg), InfeasibleError);
}

TEST_CASE("select_models equals exhaustive enumeration on random instances") {
  int checked = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int cars = 1 + trial % 3;
    const ScenarioConfig cfg = random_selection_scenario(trial, cars, 5);
    const std::vector<double> rates = random_rates(trial, cars);
    const Selection got = select_models(rates, cfg);
    const Selection want = enumerate_best(rates, cfg);
    CHECK(got.feasible == want.feasible);
    if (want.feasible) {
      CHECK(got.car_indices == want.car_indices);
      CHECK(got.receiver_index == want.receiver_index);
      CHECK(got.delay_s == doctest::Approx(want.delay_s));
      ++checked;
    }
  }
  CHECK(checked > 300);  // the sampler must exercise plenty of feasible cases
}

TEST_CASE("optimal objective never drops when a rate improves") {
  for (int trial = 0; trial < 200; ++trial) {
    const int cars = 1 + trial % 3;
    const ScenarioConfig cfg = random_selection_scenario(5000 + trial, cars, 4);
    std::vector<double> rates = random_rates(5000 + trial, cars);
    const Selection before = select_models(rates, cfg);
    rates[static_cast<std::size_t>(trial % cars)] *= 3.0;
    rates[static_cast<std::size_t>(trial % cars)] += 1e5;
    const Selection after = select_models(rates, cfg);
    if (before.feasible) {
      REQUIRE(after.feasible);
      // Compare P8 totals (the solver's objective).
      double tb = 0, ta = 0;
      for (int c = 0; c < cars; ++c) {
        tb += cfg.weights[static_cast<std::size_t>(c)] * before.car_indices[static_cast<std::size_t>(c)];
        ta += cfg.weights[static_cast<std::size_t>(c)] * after.car_indices[static_cast<std::size_t>(c)];
      }
      tb += cfg.weights[static_cast<std::size_t>(cars)] * before.receiver_index;
      ta += cfg.weights[static_cast<std::size_t>(cars)] * after.receiver_index;
      CHECK(ta >= tb - 1e-12);
    }
  }
}

TEST_CASE("returned feasibility flag matches the recomputed constraint") {
  for (int trial = 0; trial < 200; ++trial) {
    const int cars = 1 + trial % 2;
    const ScenarioConfig cfg = random_selection_scenario(9000 + trial, cars, 4);
    const std::vector<double> rates = random_rates(9000 + trial, cars);
    const Selection sel = select_models(rates, cfg);
    double delay = 0;
    for (int c = 0; c < cars; ++c)
      delay = std::max(delay,
                       transmit_delay_s(cfg.car_catalogs[static_cast<std::size_t>(c)]
                                            .size_bits(sel.car_indices[static_cast<std::size_t>(c)]),
                                        rates[static_cast<std::size_t>(c)]));
    const double t_kd =
        kd_time_s(cfg.receiver_catalog, sel.receiver_index, cfg.compute_freq_flops);
    CHECK(sel.feasible == (delay + t_kd <= cfg.t_max_s));
  }
}

TEST_CASE("p1 objective arithmetic") {
  ScenarioConfig cfg = default_scenario();
  cfg.weights = {1.0, 1.0, 1.0, 0.0};
  Selection sel;
  sel.car_indices = {2, 3};
  sel.receiver_index = 4;
  sel.feasible = true;
  const std::vector<double> rates = {1e9, 1e9};
  CHECK(p1_objective(sel, rates, cfg) == doctest::Approx(9.0));

  // Raising the delay weight strictly lowers the objective when delay > 0.
  cfg.weights = {1.0, 1.0, 1.0, 1.0};
  const double with_one = p1_objective(sel, rates, cfg);
  cfg.weights = {1.0, 1.0, 1.0, 2.0};
  CHECK(p1_objective(sel, rates, cfg) < with_one);
}

TEST_CASE("selected models maximize the objective over enumerated candidates") {
  for (int trial = 0; trial < 100; ++trial) {
    const ScenarioConfig cfg = random_selection_scenario(30000 + trial, 2, 4);
    const std::vector<double> rates = random_rates(30000 + trial, 2);
    const Selection sel = select_models(rates, cfg);
    if (!sel.feasible) continue;
    double sel_total = 0;
    for (int c = 0; c < 2; ++c)
      sel_total += cfg.weights[static_cast<std::size_t>(c)] *
                   sel.car_indices[static_cast<std::size_t>(c)];
    sel_total += cfg.weights[2] * sel.receiver_index;
    for (int i1 = 1; i1 <= cfg.car_catalogs[0].count(); ++i1)
      for (int i2 = 1; i2 <= cfg.car_catalogs[1].count(); ++i2)
        for (int ia = 1; ia <= cfg.receiver_catalog.count(); ++ia) {
          const double delay = std::max(
              transmit_delay_s(cfg.car_catalogs[0].size_bits(i1), rates[0]),
              transmit_delay_s(cfg.car_catalogs[1].size_bits(i2), rates[1]));
          if (delay + kd_time_s(cfg.receiver_catalog, ia, cfg.compute_freq_flops) >
              cfg.t_max_s)
            continue;
          const double total = cfg.weights[0] * i1 + cfg.weights[1] * i2 +
                               cfg.weights[2] * ia;
          CHECK(sel_total >= total - 1e-12);
        }
  }
}

TEST_CASE("mrmp with k_max = 0 returns the initialization") {
  ScenarioConfig cfg = default_scenario();
  cfg.elements_per_ris = {8, 8, 8};  // keep it quick
  const MrmpReport rep = mrmp(cfg, Method::Fast, 0, 4);
  REQUIRE(rep.iterations.size() == 1);
  CHECK(rep.iterations[0].k == 0);
  for (int i : rep.iterations[0].selection.car_indices) CHECK(i == 1);
  CHECK(rep.iterations[0].selection.receiver_index == 1);
}

TEST_CASE("mrmp best iterate is nondecreasing and reported coherently") {
  for (int s = 0; s < 5; ++s) {
    ScenarioConfig cfg = default_scenario();
    cfg.elements_per_ris = {8, 8, 8};
    const MrmpReport rep = mrmp(cfg, Method::Fast, 4, 50 + s);
    REQUIRE(rep.iterations.size() == 5);
    double best = -1e300;
    for (const MrmpIteration& it : rep.iterations) {
      if (it.feasible) best = std::max(best, it.objective);
      CHECK(it.k >= 0);
    }
    if (rep.feasible) {
      CHECK(rep.best_objective == doctest::Approx(best));
      CHECK(rep.final_selection.feasible);
      const int k = rep.best_k;
      CHECK(rep.iterations[static_cast<std::size_t>(k)].objective ==
            doctest::Approx(rep.best_objective));
    }
  }
}

TEST_CASE("mrmp flags an impossible budget instead of crashing") {
  ScenarioConfig cfg = default_scenario();
  cfg.elements_per_ris = {4, 4, 4};
  cfg.t_max_s = 1e-9;
  const MrmpReport rep = mrmp(cfg, Method::Fast, 2, 1);
  CHECK_FALSE(rep.feasible);
  for (const MrmpIteration& it : rep.iterations) CHECK_FALSE(it.feasible);
}

TEST_CASE("mrmp report serializations agree with the trace") {
  ScenarioConfig cfg = default_scenario();
  cfg.elements_per_ris = {6, 6, 6};
  const MrmpReport rep = mrmp(cfg, Method::Fast, 2, 9);
  const ResultTable t = mrmp_report_table(rep, cfg);
  CHECK(t.rows.size() == rep.iterations.size());
  const std::string json = mrmp_report_to_json(rep, cfg);
  CHECK(json.find("\"iterations\"") != std::string::npos);
  CHECK(json.find("\"final_plan\"") != std::string::npos);
}
