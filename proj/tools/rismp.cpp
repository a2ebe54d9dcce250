// rismp — multi-hop RIS model-sharing simulator and optimizer.
//
// Subcommands: simulate, optimize, select, mrmp, sweep, kd-demo.
// Exit codes: 0 success, 2 validation/usage error, 3 infeasibility-only run.

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>

#include "rismp/sweep.hpp"

namespace {

using namespace rismp;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitInfeasible = 3;

struct GlobalArgs {
  std::string scenario_path;
  std::optional<std::uint64_t> seed_flag;
  std::string out_path;
  std::string format = "csv";
  bool timings = false;
};

ScenarioConfig load_config(const GlobalArgs& g) {
  ScenarioConfig cfg =
      g.scenario_path.empty() ? default_scenario() : load_scenario(g.scenario_path);
  cfg.validate();
  return cfg;
}

// Precedence: --seed flag, then RISMP_SEED, then the scenario file.
std::uint64_t resolve_seed(const GlobalArgs& g, const ScenarioConfig& cfg) {
  if (g.seed_flag) return *g.seed_flag;
  if (const char* env = std::getenv("RISMP_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw ValidationError("RISMP_SEED must be an unsigned integer");
    }
  }
  return cfg.seed;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ValidationError("cannot parse number '" + item + "'");
    }
  }
  if (out.empty()) throw ValidationError("expected a comma-separated list");
  return out;
}

std::vector<Method> parse_methods(const std::string& text) {
  std::vector<Method> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(method_from_name(item));
  if (out.empty()) throw ValidationError("expected at least one method");
  return out;
}

int cmd_simulate(const GlobalArgs& g) {
  const ScenarioConfig cfg = load_config(g);
  const std::uint64_t seed = resolve_seed(g, cfg);
  const ChannelSet ch = sample_channels(cfg, seed);

  const auto dists = segment_distances(cfg);
  std::cout << "scenario: " << cfg.num_cars() << " cars, " << cfg.num_ris()
            << " RIS, seed " << seed << "\n";
  for (std::size_t m = 0; m < dists.size(); ++m) {
    std::cout << "car " << m + 1 << " segments_m:";
    for (double d : dists[m]) std::cout << " " << d;
    std::cout << "\n";
  }
  const PhasePlan plan = zero_plan(cfg);
  const std::vector<double> rates = rates_for_plan(ch, plan, cfg);
  for (std::size_t m = 0; m < rates.size(); ++m)
    std::cout << "car " << m + 1 << " zero_phase_rate_bps " << rates[m] << "\n";

  if (!g.out_path.empty()) {
    write_channelset(ch, g.out_path);
    std::cout << "wrote " << g.out_path << "\n";
  }
  return kExitOk;
}

int cmd_optimize(const GlobalArgs& g, const std::string& method_name_arg,
                 int k_max, const std::string& channels_path) {
  const ScenarioConfig cfg = load_config(g);
  const std::uint64_t seed = resolve_seed(g, cfg);
  const Method method = method_from_name(method_name_arg);

  const ChannelSet ch = channels_path.empty() ? sample_channels(cfg, seed)
                                              : read_channelset(channels_path);
  const std::vector<double> zetas = zetas_for_models(
      cfg, std::vector<int>(static_cast<std::size_t>(cfg.num_cars()), 1), 1);

  BcdOptions opt;
  opt.record_timings = g.timings;
  const BcdResult res = bcd_optimize(ch, cfg, zetas, method, k_max, seed, opt);

  const std::vector<double> rates = rates_for_plan(ch, res.plan, cfg);
  const double min_rate = *std::min_element(rates.begin(), rates.end());
  std::cout << "method " << method_name(method) << " objective " << res.objective
            << " min_rate_bps " << min_rate << "\n";
  if (!g.out_path.empty()) {
    write_trace_csv(res.trace, method, g.out_path);
    std::cout << "wrote " << g.out_path << "\n";
  }
  return res.objective >= 1.0 ? kExitOk : kExitInfeasible;
}

int cmd_select(const GlobalArgs& g, const std::string& rates_arg,
               const std::string& method_name_arg, int k_max) {
  const ScenarioConfig cfg = load_config(g);
  const std::uint64_t seed = resolve_seed(g, cfg);

  std::vector<double> rates;
  if (!rates_arg.empty()) {
    rates = parse_double_list(rates_arg);
  } else {
    const ChannelSet ch = sample_channels(cfg, seed);
    const std::vector<double> zetas = zetas_for_models(
        cfg, std::vector<int>(static_cast<std::size_t>(cfg.num_cars()), 1), 1);
    BcdOptions opt;
    opt.record_timings = g.timings;
    const BcdResult res = bcd_optimize(ch, cfg, zetas,
                                       method_from_name(method_name_arg), k_max,
                                       seed, opt);
    rates = rates_for_plan(ch, res.plan, cfg);
  }

  const Selection sel = select_models(rates, cfg);
  std::cout << "feasible " << (sel.feasible ? "yes" : "no") << "\n";
  for (std::size_t m = 0; m < sel.car_indices.size(); ++m)
    std::cout << "car " << m + 1 << " model "
              << cfg.car_catalogs[m].at(sel.car_indices[m]).label << " (index "
              << sel.car_indices[m] << ")\n";
  std::cout << "receiver model "
            << cfg.receiver_catalog.at(sel.receiver_index).label << " (index "
            << sel.receiver_index << ")\n";
  std::cout << "delay_s " << sel.delay_s << " kd_time_s " << sel.kd_time_s
            << "\n";
  if (sel.feasible) {
    std::cout << "objective " << p1_objective(sel, rates, cfg) << "\n";
  }
  return sel.feasible ? kExitOk : kExitInfeasible;
}

int cmd_mrmp(const GlobalArgs& g, const std::string& method_name_arg, int k_max) {
  const ScenarioConfig cfg = load_config(g);
  const std::uint64_t seed = resolve_seed(g, cfg);
  MrmpOptions opt;
  opt.bcd.record_timings = g.timings;
  const MrmpReport rep =
      mrmp(cfg, method_from_name(method_name_arg), k_max, seed, opt);

  std::cout << "method " << method_name(rep.method) << " feasible "
            << (rep.feasible ? "yes" : "no") << " best_k " << rep.best_k
            << " best_objective " << rep.best_objective << "\n";
  if (!g.out_path.empty()) {
    if (g.format == "json") {
      std::ofstream out(g.out_path, std::ios::binary);
      if (!out) throw ParseError("cannot write: " + g.out_path);
      out << mrmp_report_to_json(rep, cfg);
    } else {
      write_table(mrmp_report_table(rep, cfg), g.out_path, TableFormat::Csv);
    }
    std::cout << "wrote " << g.out_path << "\n";
  }
  return rep.feasible ? kExitOk : kExitInfeasible;
}

int cmd_sweep(const GlobalArgs& g, const std::string& kind_arg,
              const std::string& grid_arg, const std::string& methods_arg,
              int seeds, int k_max) {
  const ScenarioConfig cfg = load_config(g);
  SweepSpec spec;
  spec.kind = sweep_kind_from_name(kind_arg);
  if (!grid_arg.empty()) {
    spec.grid = parse_double_list(grid_arg);
  } else {
    switch (spec.kind) {
      case SweepKind::Hops: spec.grid = {1, 2, 3, 4, 5}; break;
      case SweepKind::Elements: spec.grid = {36, 49, 64, 81}; break;
      case SweepKind::Azimuth: spec.grid = {30, 45, 60, 75}; break;
      case SweepKind::Vdist: spec.grid = {15, 20, 25, 30}; break;
      case SweepKind::Iterations: spec.grid = {1, 2, 3, 4}; break;
      case SweepKind::Reward:
      case SweepKind::Selection: spec.grid = {1, 2, 3}; break;
      case SweepKind::Kd: spec.grid = {2}; break;
    }
  }
  spec.methods = methods_arg.empty()
                     ? std::vector<Method>{Method::Sdr, Method::Fast, Method::Ga,
                                           Method::Random}
                     : parse_methods(methods_arg);
  if (spec.kind == SweepKind::Reward || spec.kind == SweepKind::Selection) {
    if (methods_arg.empty())
      spec.methods = {Method::Sdr, Method::Ga, Method::Fast};
  }
  if (spec.kind == SweepKind::Kd && methods_arg.empty())
    spec.methods = {Method::Sdr};
  spec.seeds = seeds;
  spec.k_max = k_max;
  spec.base_seed = resolve_seed(g, cfg);
  spec.bcd.record_timings = false;

  const ResultTable table = run_sweep(spec, cfg);
  if (!g.out_path.empty()) {
    emit_report(table, table_format_from_name(g.format), g.out_path);
    std::cout << "wrote " << g.out_path << "\n";
  } else {
    std::cout << table_to_csv(table);
  }

  bool any_feasible = false;
  for (const std::vector<Cell>& row : table.rows)
    if (std::holds_alternative<std::string>(row[4]) &&
        std::get<std::string>(row[4]) == "yes")
      any_feasible = true;
  return any_feasible ? kExitOk : kExitInfeasible;
}

int cmd_kd_demo(const GlobalArgs& g, int seeds, double spread, double fraction,
                int steps) {
  const ScenarioConfig cfg = load_config(g);
  const std::uint64_t base_seed = resolve_seed(g, cfg);

  KdExperimentParams params;
  params.spread = spread;
  params.train_fraction = fraction / 100.0;
  params.teacher_steps = steps;
  params.student_steps = steps;

  ResultTable t;
  t.columns = {"seed", "teacher1_acc", "teacher2_acc", "baseline_acc", "kd_acc",
               "gain_points"};
  double gain_sum = 0;
  for (int s = 0; s < seeds; ++s) {
    const KdExperimentResult r =
        run_kd_experiment(params, base_seed + static_cast<std::uint64_t>(s));
    const double gain = 100.0 * (r.kd_acc - r.baseline_acc);
    gain_sum += gain;
    t.rows.push_back({static_cast<std::int64_t>(base_seed + s),
                      r.teacher_acc.size() > 0 ? r.teacher_acc[0] : 0.0,
                      r.teacher_acc.size() > 1 ? r.teacher_acc[1] : 0.0,
                      r.baseline_acc, r.kd_acc, gain});
  }
  std::cout << "seeds " << seeds << " mean_gain_points " << gain_sum / seeds
            << "\n";
  if (!g.out_path.empty()) {
    emit_report(t, table_format_from_name(g.format), g.out_path);
    std::cout << "wrote " << g.out_path << "\n";
  } else {
    std::cout << table_to_csv(t);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-hop RIS model-sharing simulator"};
  app.require_subcommand(1);

  GlobalArgs g;
  std::uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "override the run seed");
  app.add_option("--scenario", g.scenario_path, "scenario JSON file");
  app.add_option("--out", g.out_path, "output file path");
  app.add_option("--format", g.format, "output format: csv|json")
      ->check(CLI::IsMember({"csv", "json"}));
  app.add_flag("--timings", g.timings,
               "record wall-clock columns (makes outputs non-reproducible)");

  auto* sim = app.add_subcommand("simulate", "sample one channel realization");

  std::string method = "sdr";
  int k_max = 4;
  std::string channels_path;
  auto* opt = app.add_subcommand("optimize", "optimize RIS phases");
  opt->add_option("--method", method, "sdr|fast|ga|random");
  opt->add_option("--kmax", k_max, "outer BCD iterations");
  opt->add_option("--channels", channels_path, "channel-set fixture to reuse");

  std::string rates_arg;
  auto* sel = app.add_subcommand("select", "select models under the budget");
  sel->add_option("--rates", rates_arg, "comma-separated per-car rates (bps)");
  sel->add_option("--method", method, "phase method when rates are computed");
  sel->add_option("--kmax", k_max, "outer BCD iterations");

  auto* mr = app.add_subcommand("mrmp", "joint phase/model alternation");
  mr->add_option("--method", method, "sdr|fast|ga|random");
  mr->add_option("--kmax", k_max, "alternation iterations");

  std::string kind = "hops", grid_arg, methods_arg;
  int seeds = 1;
  auto* sw = app.add_subcommand("sweep", "run an experiment sweep");
  sw->add_option("--kind", kind,
                 "hops|elements|azimuth|vdist|iterations|reward|selection|kd");
  sw->add_option("--grid", grid_arg, "comma-separated grid points");
  sw->add_option("--methods", methods_arg, "comma-separated methods");
  sw->add_option("--seeds", seeds, "seed count");
  sw->add_option("--kmax", k_max, "outer iterations per run");

  double spread = 1.5, fraction = 2.0;
  int kd_steps = 400;
  auto* kd = app.add_subcommand("kd-demo", "sandbox distillation experiment");
  kd->add_option("--seeds", seeds, "seed count");
  kd->add_option("--spread", spread, "cluster spread");
  kd->add_option("--fraction", fraction, "student label fraction in percent");
  kd->add_option("--steps", kd_steps, "training steps");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  if (seed_opt->count() > 0) g.seed_flag = seed_value;

  try {
    if (sim->parsed()) return cmd_simulate(g);
    if (opt->parsed()) return cmd_optimize(g, method, k_max, channels_path);
    if (sel->parsed()) return cmd_select(g, rates_arg, method, k_max);
    if (mr->parsed()) return cmd_mrmp(g, method, k_max);
    if (sw->parsed()) return cmd_sweep(g, kind, grid_arg, methods_arg, seeds, k_max);
    if (kd->parsed()) return cmd_kd_demo(g, seeds, spread, fraction, kd_steps);
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitValidation;
}
