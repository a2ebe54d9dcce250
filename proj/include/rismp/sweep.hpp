// Experiment driver: reproducible multi-seed sweeps over hop count, element
// count, panel azimuth, vertical spacing, BCD iterations, joint reward,
// model selection, and the KD sandbox, emitted as CSV/JSON tables.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rismp/kd.hpp"
#include "rismp/selection.hpp"

namespace rismp {

enum class SweepKind {
  Hops,
  Elements,
  Azimuth,
  Vdist,
  Iterations,
  Reward,
  Selection,
  Kd,
};
SweepKind sweep_kind_from_name(const std::string& name);
std::string sweep_kind_name(SweepKind k);

struct KdExperimentParams {
  int classes = 16;
  int dims = 32;
  int per_class = 400;
  double spread = 1.5;
  double train_fraction = 0.02;
  double test_fraction = 0.80;
  double temperature = 4.0;
  std::vector<double> weights = {0.25, 0.25};  // two teachers
  int teacher_steps = 400;
  int student_steps = 400;
  double learning_rate = 0.5;
};

struct KdExperimentResult {
  double baseline_acc = 0;  // student trained without teachers
  double kd_acc = 0;        // student trained with the teacher ensemble
  std::vector<double> teacher_acc;
};

// Paired comparison on one seed: identical data, split, and initialization
// for both arms; only the teacher terms differ.
KdExperimentResult run_kd_experiment(const KdExperimentParams& params,
                                     std::uint64_t seed);

struct SweepSpec {
  SweepKind kind = SweepKind::Hops;
  std::vector<double> grid;
  std::vector<Method> methods;
  int seeds = 1;
  std::uint64_t base_seed = 1;
  int k_max = 4;
  KdExperimentParams kd;
  BcdOptions bcd;

  void validate() const;
};

// One row per (grid point, method, seed), sorted by grid point, then method
// name, then seed, with mean/std aggregate rows appended per group.
// Infeasible points become rows with feasible = "no"; the sweep never aborts
// on them. The output is a pure function of (spec, base_cfg).
ResultTable run_sweep(const SweepSpec& spec, const ScenarioConfig& base_cfg);

// Validates and writes the table; CSV and JSON carry identical values.
void emit_report(const ResultTable& table, TableFormat format,
                 const std::string& path);

}  // namespace rismp
