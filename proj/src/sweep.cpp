#include "rismp/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rismp/rng.hpp"

namespace rismp {

SweepKind sweep_kind_from_name(const std::string& name) {
  if (name == "hops") return SweepKind::Hops;
  if (name == "elements") return SweepKind::Elements;
  if (name == "azimuth") return SweepKind::Azimuth;
  if (name == "vdist") return SweepKind::Vdist;
  if (name == "iterations") return SweepKind::Iterations;
  if (name == "reward") return SweepKind::Reward;
  if (name == "selection") return SweepKind::Selection;
  if (name == "kd") return SweepKind::Kd;
  throw ValidationError("unknown sweep kind '" + name + "'");
}

std::string sweep_kind_name(SweepKind k) {
  switch (k) {
    case SweepKind::Hops: return "hops";
    case SweepKind::Elements: return "elements";
    case SweepKind::Azimuth: return "azimuth";
    case SweepKind::Vdist: return "vdist";
    case SweepKind::Iterations: return "iterations";
    case SweepKind::Reward: return "reward";
    case SweepKind::Selection: return "selection";
    case SweepKind::Kd: return "kd";
  }
  return "?";
}

void SweepSpec::validate() const {
  if (grid.empty()) throw ValidationError("sweep grid must not be empty");
  if (methods.empty()) throw ValidationError("sweep methods must not be empty");
  if (seeds < 1) throw ValidationError("sweep needs seeds >= 1");
  if (k_max < 1) throw ValidationError("sweep needs k_max >= 1");
  if (kind == SweepKind::Hops || kind == SweepKind::Reward ||
      kind == SweepKind::Selection) {
    for (double g : grid)
      if (g < 1 || g != std::floor(g))
        throw ValidationError("RIS counts must be positive integers");
  }
  if (kind == SweepKind::Elements)
    for (double g : grid)
      if (g < 1 || g != std::floor(g))
        throw ValidationError("element counts must be positive integers");
}

KdExperimentResult run_kd_experiment(const KdExperimentParams& params,
                                     std::uint64_t seed) {
  const SandboxDataset ds = gen_synthetic_dataset(
      seed, params.classes, params.dims, params.per_class, params.spread,
      params.train_fraction, params.test_fraction);

  const Eigen::MatrixXd pool_x = ds.features.topRows(ds.pool_count);
  const Eigen::VectorXi pool_y = ds.labels.head(ds.pool_count);
  const Eigen::MatrixXd student_x = ds.features.topRows(ds.student_train_count);
  const Eigen::VectorXi student_y = ds.labels.head(ds.student_train_count);
  const Eigen::Index n_test = ds.size() - ds.test_start;
  const Eigen::MatrixXd test_x = ds.features.bottomRows(n_test);
  const Eigen::VectorXi test_y = ds.labels.tail(n_test);

  KdExperimentResult res;
  std::vector<SandboxModel> teachers;
  for (std::size_t t = 0; t < params.weights.size(); ++t) {
    TrainOptions topt;
    topt.steps = params.teacher_steps;
    topt.learning_rate = params.learning_rate;
    // Teachers differ in initialization and in how much of the feature space
    // they read, standing in for non-identical architectures.
    topt.feature_count = t == 0 ? params.dims : (3 * params.dims) / 4;
    TrainResult tr = train_sandbox(pool_x, pool_y, params.classes, {}, topt,
                                   stream_key(seed, kTagTrain, 100 + t), test_x,
                                   test_y);
    tr.model.label = "teacher-" + std::to_string(t + 1);
    res.teacher_acc.push_back(accuracy(tr.model, test_x, test_y));
    teachers.push_back(std::move(tr.model));
  }

  TrainOptions sopt;
  sopt.steps = params.student_steps;
  sopt.learning_rate = params.learning_rate;
  sopt.temperature = params.temperature;

  TrainOptions base_opt = sopt;  // same budget, no teacher terms
  const TrainResult baseline =
      train_sandbox(student_x, student_y, params.classes, {}, base_opt,
                    stream_key(seed, kTagTrain, 1), test_x, test_y);
  res.baseline_acc = accuracy(baseline.model, test_x, test_y);

  sopt.weights = params.weights;
  const TrainResult kd =
      train_sandbox(student_x, student_y, params.classes, teachers, sopt,
                    stream_key(seed, kTagTrain, 1), test_x, test_y);
  res.kd_acc = accuracy(kd.model, test_x, test_y);
  return res;
}

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

struct Task {
  double grid_value = 0;
  Method method = Method::Sdr;
  int seed_index = 0;
};

struct TaskResult {
  bool ran = false;
  bool feasible = false;
  double min_rate_bps = kNan;
  double objective = kNan;
  std::vector<std::pair<double, double>> per_iter;  // (min_rate, objective)
  std::vector<std::string> car_models;
  std::string receiver_model;
  double baseline_acc = kNan;
  double kd_acc = kNan;
};

ScenarioConfig config_for(const SweepSpec& spec, const ScenarioConfig& base,
                          double grid_value) {
  switch (spec.kind) {
    case SweepKind::Hops:
    case SweepKind::Reward:
    case SweepKind::Selection:
      return with_hop_count(base, static_cast<int>(grid_value));
    case SweepKind::Elements:
      return with_elements(base, static_cast<int>(grid_value));
    case SweepKind::Azimuth:
      return with_azimuth(base, grid_value);
    case SweepKind::Vdist:
      return with_vertical_offset(base, grid_value);
    default:
      return base;
  }
}

TaskResult run_task(const SweepSpec& spec, const ScenarioConfig& base,
                    const Task& task) {
  TaskResult r;
  r.ran = true;
  const std::uint64_t seed = spec.base_seed + static_cast<std::uint64_t>(task.seed_index);

  if (spec.kind == SweepKind::Kd) {
    KdExperimentParams kp = spec.kd;
    kp.train_fraction = task.grid_value / 100.0;
    const KdExperimentResult kd = run_kd_experiment(kp, seed);
    r.baseline_acc = kd.baseline_acc;
    r.kd_acc = kd.kd_acc;
    r.feasible = true;
    return r;
  }

  if (spec.kind == SweepKind::Reward || spec.kind == SweepKind::Selection) {
    const ScenarioConfig cfg = config_for(spec, base, task.grid_value);
    MrmpOptions mopt;
    mopt.bcd = spec.bcd;
    mopt.bcd.record_timings = false;
    const MrmpReport rep = mrmp(cfg, task.method, spec.k_max, seed, mopt);
    r.feasible = rep.feasible;
    if (rep.feasible) {
      r.objective = rep.best_objective;
      r.min_rate_bps =
          rep.iterations[static_cast<std::size_t>(rep.best_k)].min_rate_bps;
    }
    const Selection& sel = rep.final_selection;
    for (std::size_t m = 0; m < sel.car_indices.size(); ++m)
      r.car_models.push_back(cfg.car_catalogs[m].at(sel.car_indices[m]).label);
    r.receiver_model = cfg.receiver_catalog.at(sel.receiver_index).label;
    return r;
  }

  // Rate-style kinds: optimize phases with the smallest-model weights and
  // report the final min rate; feasible means the gain requirement is met.
  const ScenarioConfig cfg = config_for(spec, base, task.grid_value);
  const ChannelSet ch = sample_channels(cfg, seed);
  std::vector<double> zetas;
  try {
    zetas = zetas_for_models(
        cfg, std::vector<int>(static_cast<std::size_t>(cfg.num_cars()), 1), 1);
  } catch (const InfeasibleError&) {
    r.feasible = false;
    return r;
  }
  BcdOptions bopt = spec.bcd;
  bopt.record_timings = false;
  const BcdResult bcd =
      bcd_optimize(ch, cfg, zetas, task.method, spec.k_max, seed, bopt);
  r.objective = bcd.objective;
  r.feasible = bcd.objective >= 1.0;
  r.min_rate_bps = bcd.trace.back().min_rate_bps;
  if (spec.kind == SweepKind::Iterations) {
    const int n_hops = cfg.num_ris();
    for (int k = 1; k <= spec.k_max; ++k) {
      const BcdTraceRow& row =
          bcd.trace[static_cast<std::size_t>(k * n_hops - 1)];
      r.per_iter.emplace_back(row.min_rate_bps, row.objective);
    }
  }
  return r;
}

void append_aggregates(ResultTable& t, std::size_t group_start,
                       std::size_t group_end, double grid_value,
                       const std::string& method,
                       const std::vector<std::size_t>& value_cols) {
  // mean and std (population) per numeric column over finite entries.
  std::vector<Cell> mean_row(t.columns.size(), std::string{});
  std::vector<Cell> std_row(t.columns.size(), std::string{});
  mean_row[0] = std::get<std::string>(t.rows[group_start][0]);
  std_row[0] = std::get<std::string>(t.rows[group_start][0]);
  mean_row[1] = grid_value;
  std_row[1] = grid_value;
  mean_row[2] = method;
  std_row[2] = method;
  mean_row[3] = static_cast<std::int64_t>(-1);
  std_row[3] = static_cast<std::int64_t>(-1);
  mean_row.back() = std::string("mean");
  std_row.back() = std::string("std");
  for (std::size_t col : value_cols) {
    double sum = 0, sum2 = 0;
    int count = 0;
    for (std::size_t i = group_start; i < group_end; ++i) {
      if (!std::holds_alternative<double>(t.rows[i][col])) continue;
      const double v = std::get<double>(t.rows[i][col]);
      if (!std::isfinite(v)) continue;
      sum += v;
      sum2 += v * v;
      ++count;
    }
    if (count > 0) {
      const double mean = sum / count;
      mean_row[col] = mean;
      std_row[col] = std::sqrt(std::max(0.0, sum2 / count - mean * mean));
    } else {
      mean_row[col] = kNan;
      std_row[col] = kNan;
    }
  }
  t.rows.push_back(std::move(mean_row));
  t.rows.push_back(std::move(std_row));
}

}  // namespace

ResultTable run_sweep(const SweepSpec& spec, const ScenarioConfig& base_cfg) {
  spec.validate();
  base_cfg.validate();

  std::vector<double> grid = spec.grid;
  std::sort(grid.begin(), grid.end());
  std::vector<Method> methods = spec.methods;
  std::sort(methods.begin(), methods.end(), [](Method a, Method b) {
    return method_name(a) < method_name(b);
  });
  methods.erase(std::unique(methods.begin(), methods.end()), methods.end());

  // For the iterations kind the grid is the reported outer-iteration index;
  // one optimization run per (method, seed) covers the whole grid.
  const bool per_iteration = spec.kind == SweepKind::Iterations;
  SweepSpec run_spec = spec;
  if (per_iteration) {
    for (double g : grid)
      if (g < 1 || g != std::floor(g))
        throw ValidationError("iteration indices must be positive integers");
    run_spec.k_max = static_cast<int>(grid.back());
  }

  std::vector<Task> tasks;
  if (per_iteration || spec.kind == SweepKind::Kd) {
    const std::vector<double> task_grid =
        per_iteration ? std::vector<double>{grid.back()} : grid;
    for (double g : task_grid)
      for (Method m : methods)
        for (int s = 0; s < spec.seeds; ++s) tasks.push_back({g, m, s});
  } else {
    for (double g : grid)
      for (Method m : methods)
        for (int s = 0; s < spec.seeds; ++s) tasks.push_back({g, m, s});
  }

  std::vector<TaskResult> results(tasks.size());
  const std::int64_t n_tasks = static_cast<std::int64_t>(tasks.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) if (n_tasks > 1)
#endif
  for (std::int64_t i = 0; i < n_tasks; ++i)
    results[static_cast<std::size_t>(i)] =
        run_task(run_spec, base_cfg, tasks[static_cast<std::size_t>(i)]);

  ResultTable t;
  const std::string kind = sweep_kind_name(spec.kind);
  std::vector<std::size_t> value_cols;
  if (spec.kind == SweepKind::Kd) {
    t.columns = {"kind", "grid", "method", "seed", "feasible",
                 "baseline_acc", "kd_acc", "gain_points", "stat"};
    value_cols = {5, 6, 7};
  } else if (spec.kind == SweepKind::Selection) {
    t.columns = {"kind", "grid", "method", "seed", "feasible",
                 "min_rate_bps", "objective"};
    for (int m = 0; m < base_cfg.num_cars(); ++m)
      t.columns.push_back("car" + std::to_string(m + 1) + "_model");
    t.columns.push_back("receiver_model");
    t.columns.push_back("stat");
    value_cols = {5, 6};
  } else {
    t.columns = {"kind", "grid", "method", "seed", "feasible",
                 "min_rate_bps", "objective", "stat"};
    value_cols = {5, 6};
  }

  auto result_for = [&](double g, Method m, int s) -> const TaskResult& {
    for (std::size_t i = 0; i < tasks.size(); ++i)
      if ((per_iteration || tasks[i].grid_value == g) && tasks[i].method == m &&
          tasks[i].seed_index == s)
        return results[i];
    throw ValidationError("internal: task lookup failed");
  };

  for (double g : grid) {
    for (Method m : methods) {
      const std::size_t group_start = t.rows.size();
      for (int s = 0; s < spec.seeds; ++s) {
        const TaskResult& r = result_for(g, m, s);
        std::vector<Cell> row;
        row.push_back(kind);
        row.push_back(g);
        row.push_back(method_name(m));
        row.push_back(static_cast<std::int64_t>(
            spec.base_seed + static_cast<std::uint64_t>(s)));
        row.push_back(std::string(r.feasible ? "yes" : "no"));
        if (spec.kind == SweepKind::Kd) {
          row.push_back(r.baseline_acc);
          row.push_back(r.kd_acc);
          row.push_back(100.0 * (r.kd_acc - r.baseline_acc));
        } else if (per_iteration) {
          const std::size_t it = static_cast<std::size_t>(g) - 1;
          row.push_back(r.per_iter[it].first);
          row.push_back(r.per_iter[it].second);
        } else {
          row.push_back(r.min_rate_bps);
          row.push_back(r.objective);
        }
        if (spec.kind == SweepKind::Selection) {
          for (const std::string& label : r.car_models) row.push_back(label);
          row.push_back(r.receiver_model);
        }
        row.push_back(std::string{});  // stat
        t.rows.push_back(std::move(row));
      }
      append_aggregates(t, group_start, t.rows.size(), g, method_name(m),
                        value_cols);
    }
  }
  t.check();
  return t;
}

void emit_report(const ResultTable& table, TableFormat format,
                 const std::string& path) {
  if (table.rows.empty()) throw ValidationError("refusing to emit an empty table");
  write_table(table, path, format);
}

}  // namespace rismp
