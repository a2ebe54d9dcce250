// Model selection under the delay budget (exact), the joint objective, and
// the full alternation between phase optimization and selection.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rismp/phase_opt.hpp"
#include "rismp/table.hpp"

namespace rismp {

struct Selection {
  std::vector<int> car_indices;  // i_m, 1-based
  int receiver_index = 1;        // i_A, 1-based
  bool feasible = false;
  double delay_s = 0;    // max_m S_m(i_m) / R_m
  double kd_time_s = 0;  // T_kd(i_A)
};

// F(i_A) / f_A seconds.
double kd_time_s(const ModelCatalog& receiver, int receiver_index, double f_a);

// Exact maximizer of sum_m w_m i_m + w_{M+1} i_A subject to
// max_m S_m(i_m)/R_m + T_kd(i_A) <= t_max. For a fixed i_A each car can take
// its largest index that fits the remaining budget independently, so scanning
// i_A gives the optimum without enumeration. Ties resolve toward larger i_A,
// then lexicographically larger car indices. Returns an infeasible Selection
// (smallest models, diagnostics filled) when even those break the budget.
Selection select_models(const std::vector<double>& rates_bps,
                        const ScenarioConfig& cfg);

// P1 objective: sum_m w_m i_m + w_{M+1} i_A - w_{M+2} max_m S_m(i_m)/R_m.
// Throws InfeasibleError for an infeasible selection.
double p1_objective(const Selection& sel, const std::vector<double>& rates_bps,
                    const ScenarioConfig& cfg);

struct MrmpIteration {
  int k = 0;
  bool feasible = false;
  double objective = 0;  // NaN when infeasible
  Selection selection;
  double min_rate_bps = 0;
  double delay_s = 0;
};

struct MrmpReport {
  std::vector<MrmpIteration> iterations;  // k = 0..k_max
  PhasePlan final_plan;                   // best iterate's plan
  Selection final_selection;              // best iterate's selection
  int best_k = 0;
  bool feasible = false;
  double best_objective = 0;
  Method method = Method::Sdr;
};

struct MrmpOptions {
  BcdOptions bcd;
};

// Alternation: models start smallest, phases random; each iteration runs one
// block-coordinate pass over all hops and then reselects models. The report
// carries the trace and the best iterate encountered.
MrmpReport mrmp(const ScenarioConfig& cfg, Method method, int k_max,
                std::uint64_t seed, const MrmpOptions& opt = {});

std::string mrmp_report_to_json(const MrmpReport& report,
                                const ScenarioConfig& cfg);
// CSV summary, one row per iteration.
ResultTable mrmp_report_table(const MrmpReport& report,
                              const ScenarioConfig& cfg);

}  // namespace rismp
