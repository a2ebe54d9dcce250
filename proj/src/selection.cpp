#include "rismp/selection.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

#include "rismp/rng.hpp"

namespace rismp {

double kd_time_s(const ModelCatalog& receiver, int receiver_index, double f_a) {
  if (!(f_a > 0)) throw ValidationError("compute frequency must be positive");
  return receiver.kd_flops(receiver_index) / f_a;
}

namespace {

double selection_delay(const std::vector<int>& car_indices,
                       const std::vector<double>& rates,
                       const ScenarioConfig& cfg) {
  double delay = 0;
  for (std::size_t m = 0; m < car_indices.size(); ++m)
    delay = std::max(delay, transmit_delay_s(
                                cfg.car_catalogs[m].size_bits(car_indices[m]),
                                rates[m]));
  return delay;
}

double selection_total(const std::vector<int>& car_indices, int receiver_index,
                       const ScenarioConfig& cfg) {
  double total = 0;
  for (std::size_t m = 0; m < car_indices.size(); ++m)
    total += cfg.weights[m] * car_indices[m];
  total += cfg.weights[static_cast<std::size_t>(cfg.num_cars())] * receiver_index;
  return total;
}

// Total order used by both the solver and the enumeration oracle in tests:
// objective first, then larger i_A, then lexicographically larger i_m.
bool selection_better(double total_a, int ia_a, const std::vector<int>& cars_a,
                      double total_b, int ia_b, const std::vector<int>& cars_b) {
  if (total_a != total_b) return total_a > total_b;
  if (ia_a != ia_b) return ia_a > ia_b;
  return cars_a > cars_b;
}

}  // namespace

Selection select_models(const std::vector<double>& rates_bps,
                        const ScenarioConfig& cfg) {
  cfg.validate();
  const int m = cfg.num_cars();
  if (static_cast<int>(rates_bps.size()) != m)
    throw ValidationError("one rate per local car is required");
  for (double r : rates_bps)
    if (r < 0) throw ValidationError("rates must be nonnegative");

  Selection best;
  bool found = false;

  for (int ia = cfg.receiver_catalog.count(); ia >= 1; --ia) {
    const double t_kd = kd_time_s(cfg.receiver_catalog, ia, cfg.compute_freq_flops);
    const double budget = cfg.t_max_s - t_kd;
    if (budget < 0) continue;

    std::vector<int> cars(static_cast<std::size_t>(m), 0);
    bool ok = true;
    for (int car = 0; car < m && ok; ++car) {
      const ModelCatalog& cat = cfg.car_catalogs[static_cast<std::size_t>(car)];
      int pick = 0;
      for (int i = cat.count(); i >= 1; --i) {
        if (transmit_delay_s(cat.size_bits(i),
                             rates_bps[static_cast<std::size_t>(car)]) <= budget) {
          pick = i;
          break;
        }
      }
      if (pick == 0)
        ok = false;
      else
        cars[static_cast<std::size_t>(car)] = pick;
    }
    if (!ok) continue;

    const double total = selection_total(cars, ia, cfg);
    if (!found || selection_better(total, ia, cars, selection_total(best.car_indices, best.receiver_index, cfg),
                                   best.receiver_index, best.car_indices)) {
      best.car_indices = cars;
      best.receiver_index = ia;
      best.feasible = true;
      best.kd_time_s = t_kd;
      best.delay_s = selection_delay(cars, rates_bps, cfg);
      found = true;
    }
  }

  if (!found) {
    // Diagnostics for the caller: the smallest possible combination and how
    // badly it misses the budget.
    best.car_indices.assign(static_cast<std::size_t>(m), 1);
    best.receiver_index = 1;
    best.feasible = false;
    best.kd_time_s = kd_time_s(cfg.receiver_catalog, 1, cfg.compute_freq_flops);
    best.delay_s = selection_delay(best.car_indices, rates_bps, cfg);
  }
  return best;
}

double p1_objective(const Selection& sel, const std::vector<double>& rates_bps,
                    const ScenarioConfig& cfg) {
  if (!sel.feasible)
    throw InfeasibleError("objective undefined for an infeasible selection");
  const double delay = selection_delay(sel.car_indices, rates_bps, cfg);
  return selection_total(sel.car_indices, sel.receiver_index, cfg) -
         cfg.weights[static_cast<std::size_t>(cfg.num_cars()) + 1] * delay;
}

MrmpReport mrmp(const ScenarioConfig& cfg, Method method, int k_max,
                std::uint64_t seed, const MrmpOptions& opt) {
  cfg.validate();
  if (k_max < 0) throw ValidationError("k_max must be >= 0");

  MrmpReport report;
  report.method = method;

  const ChannelSet ch = sample_channels(cfg, seed);
  PhasePlan plan = random_plan(cfg, seed);

  Selection sel;
  sel.car_indices.assign(static_cast<std::size_t>(cfg.num_cars()), 1);
  sel.receiver_index = 1;

  double best_obj = -std::numeric_limits<double>::infinity();

  auto record = [&](int k) {
    MrmpIteration it;
    it.k = k;
    const std::vector<double> rates = rates_for_plan(ch, plan, cfg);
    it.min_rate_bps = *std::min_element(rates.begin(), rates.end());
    it.selection = sel;
    it.selection.kd_time_s =
        kd_time_s(cfg.receiver_catalog, sel.receiver_index, cfg.compute_freq_flops);
    it.selection.delay_s = selection_delay(sel.car_indices, rates, cfg);
    it.delay_s = it.selection.delay_s;
    it.selection.feasible =
        it.selection.delay_s + it.selection.kd_time_s <= cfg.t_max_s;
    it.feasible = it.selection.feasible;
    it.objective = it.feasible ? p1_objective(it.selection, rates, cfg)
                               : std::numeric_limits<double>::quiet_NaN();
    report.iterations.push_back(it);
    if (it.feasible && it.objective > best_obj) {
      best_obj = it.objective;
      report.best_k = k;
      report.best_objective = it.objective;
      report.final_plan = plan;
      report.final_selection = it.selection;
      report.feasible = true;
    }
  };

  record(0);

  for (int k = 1; k <= k_max; ++k) {
    std::vector<double> zetas;
    try {
      zetas = zetas_for_models(cfg, sel.car_indices, sel.receiver_index);
    } catch (const InfeasibleError&) {
      // Even the KD time alone breaks the budget; nothing to optimize.
      record(k);
      continue;
    }
    BcdOptions bopt = opt.bcd;
    bopt.initial_plan = plan;
    const BcdResult bcd = bcd_optimize(
        ch, cfg, zetas, method, 1,
        stream_key(seed, 0xA17E, static_cast<std::uint64_t>(k)), bopt);
    plan = bcd.plan;

    const std::vector<double> rates = rates_for_plan(ch, plan, cfg);
    sel = select_models(rates, cfg);
    if (!sel.feasible) {
      sel.car_indices.assign(static_cast<std::size_t>(cfg.num_cars()), 1);
      sel.receiver_index = 1;
    }
    record(k);
  }

  if (!report.feasible) {
    report.final_plan = plan;
    report.final_selection = report.iterations.back().selection;
    report.best_k = k_max;
    report.best_objective = std::numeric_limits<double>::quiet_NaN();
  }
  return report;
}

namespace {

nlohmann::json selection_to_json(const Selection& sel, const ScenarioConfig& cfg) {
  nlohmann::json cars = nlohmann::json::array();
  for (std::size_t m = 0; m < sel.car_indices.size(); ++m)
    cars.push_back({{"index", sel.car_indices[m]},
                    {"label", cfg.car_catalogs[m].at(sel.car_indices[m]).label}});
  return {{"cars", cars},
          {"receiver",
           {{"index", sel.receiver_index},
            {"label", cfg.receiver_catalog.at(sel.receiver_index).label}}},
          {"feasible", sel.feasible},
          {"delay_s", sel.delay_s},
          {"kd_time_s", sel.kd_time_s}};
}

}  // namespace

std::string mrmp_report_to_json(const MrmpReport& report,
                                const ScenarioConfig& cfg) {
  nlohmann::json iters = nlohmann::json::array();
  for (const MrmpIteration& it : report.iterations) {
    nlohmann::json j = {{"k", it.k},
                        {"feasible", it.feasible},
                        {"min_rate_bps", it.min_rate_bps},
                        {"delay_s", it.delay_s},
                        {"selection", selection_to_json(it.selection, cfg)}};
    if (std::isfinite(it.objective))
      j["objective"] = it.objective;
    else
      j["objective"] = nullptr;
    iters.push_back(std::move(j));
  }
  nlohmann::json j = {{"method", method_name(report.method)},
                      {"feasible", report.feasible},
                      {"best_k", report.best_k},
                      {"iterations", iters},
                      {"final_selection",
                       selection_to_json(report.final_selection, cfg)}};
  if (std::isfinite(report.best_objective))
    j["best_objective"] = report.best_objective;
  else
    j["best_objective"] = nullptr;
  nlohmann::json plan = nlohmann::json::array();
  for (const Eigen::VectorXd& t : report.final_plan.thetas)
    plan.push_back(std::vector<double>(t.data(), t.data() + t.size()));
  j["final_plan"] = plan;
  return j.dump(2) + "\n";
}

ResultTable mrmp_report_table(const MrmpReport& report,
                              const ScenarioConfig& cfg) {
  ResultTable t;
  t.columns = {"k", "method", "feasible", "objective", "min_rate_bps",
               "delay_s", "kd_time_s", "receiver_model"};
  for (int m = 0; m < cfg.num_cars(); ++m)
    t.columns.push_back("car" + std::to_string(m + 1) + "_model");
  for (const MrmpIteration& it : report.iterations) {
    std::vector<Cell> row = {static_cast<std::int64_t>(it.k),
                             method_name(report.method),
                             std::string(it.feasible ? "yes" : "no"),
                             it.objective,
                             it.min_rate_bps,
                             it.delay_s,
                             it.selection.kd_time_s,
                             cfg.receiver_catalog.at(it.selection.receiver_index).label};
    for (std::size_t m = 0; m < it.selection.car_indices.size(); ++m)
      row.push_back(cfg.car_catalogs[m].at(it.selection.car_indices[m]).label);
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace rismp
