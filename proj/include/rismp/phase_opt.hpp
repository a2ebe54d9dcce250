// RIS phase-shift optimization: per-hop effective vectors, the max-min
// semidefinite relaxation with rank-one extraction, the fast closed-form
// rule, genetic and random baselines, and the accept-if-improved block
// coordinate descent over hops.

#pragma once

#include <Eigen/Core>
#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rismp/channel.hpp"

namespace rismp {

// Effective per-transmitter vectors for one hop: with every other hop folded
// in at its current phases, the end-to-end gain of transmitter m is
// sum_i e^{j theta_i} a[m][i].
struct HopProblem {
  std::vector<Eigen::VectorXcd> a;
  std::vector<double> zetas;
  int hop_index = 0;  // 1-based
  bool degenerate = false;  // some transmitter has an all-zero vector

  int num_tx() const { return static_cast<int>(a.size()); }
  Eigen::Index dim() const { return a.empty() ? 0 : a.front().size(); }
};

struct SdpSolution {
  Eigen::MatrixXcd V;        // Hermitian PSD, unit diagonal
  double upper_bound = 0;    // certified bound on the rank-one optimum
  Eigen::VectorXd extracted_phases;  // filled by extract_rank_one
  double achieved_value = 0;         // min_m zeta |v^H a|^2 of the extraction
  int randomization_trials = 0;
  int sweeps = 0;
  bool converged = false;
};

struct SdpOptions {
  double tol = 1e-7;       // relative certified duality gap
  int max_sweeps = 4000;   // coordinate sweeps across all inner solves
  int rank = 0;            // 0 = automatic
  std::uint64_t seed = 0;  // deterministic factor initialization
};

struct GaParams {
  int population = 64;
  int generations = 200;
  int tournament = 3;
  double mutation_sigma = 0.1;  // radians
  double mutation_rate = 0.05;
};

enum class Method { Sdr, Fast, Ga, Random };
std::string method_name(Method m);
Method method_from_name(const std::string& name);

// zeta_m = P_m / (sigma^2 (2^{S_m(i_m)/(B_m (T_max - T_kd))} - 1)) for the
// models chosen by `model_indices` (1-based, one per car).
std::vector<double> zetas_for_models(const ScenarioConfig& cfg,
                                     const std::vector<int>& model_indices,
                                     int receiver_index);

HopProblem build_hop_problem(const ChannelSet& ch, const PhasePlan& plan,
                             int hop_1based, const std::vector<double>& zetas);

// min_m zeta_m |sum_i e^{j theta_i} a_{m,i}|^2
double hop_objective(const HopProblem& p, const Eigen::VectorXd& thetas);

// Batch objective evaluation over candidate phase vectors. The parallel
// version gives bit-identical results to the serial reference.
Eigen::VectorXd eval_candidates_serial(const HopProblem& p,
                                       const std::vector<Eigen::VectorXd>& cands);
Eigen::VectorXd eval_candidates(const HopProblem& p,
                                const std::vector<Eigen::VectorXd>& cands);

// Canonical plan-level objective used for accept decisions and traces:
// min_m zeta_m |cascade_gain(ch, plan, m)|^2.
double plan_objective(const ChannelSet& ch, const PhasePlan& plan,
                      const std::vector<double>& zetas);

// Phases from an SDP-space vector: theta_i = -arg(v_i) mod 2*pi.
Eigen::VectorXd phases_from_v(const Eigen::VectorXcd& v);

// Max-min semidefinite relaxation for one hop, solved by low-rank coordinate
// ascent on the factorized matrix with the hardest-transmitter mixture found
// by convex search; the reported upper bound is certified by a feasible dual
// point. Throws NonConvergence (carrying the best iterate) if the relative
// certified gap cannot be brought under tol.
SdpSolution sdp_maxmin(const HopProblem& p, const SdpOptions& opt = {});

struct NonConvergence : std::runtime_error {
  explicit NonConvergence(const std::string& what, SdpSolution best_iterate)
      : std::runtime_error(what), best(std::move(best_iterate)) {}
  SdpSolution best;
};

// Eigendecomposition V = U S U^H, L Gaussian candidates U S^{1/2} r projected
// to unit modulus (plus the deterministic principal-eigenvector rounding),
// keeping the candidate with the best min_m zeta |v^H a|^2.
void extract_rank_one(SdpSolution& sol, const HopProblem& p, int trials,
                      std::uint64_t seed);

// Closed-form rule: theta = -arg(sum_m a_m / (zeta_m |a_m|^beta_a)) taken
// elementwise; exact alignment optimum for a single transmitter.
Eigen::VectorXd fast_hop(const HopProblem& p, double beta_a = 1.0);

Eigen::VectorXd ga_hop(const HopProblem& p, const GaParams& params,
                       std::uint64_t seed);
Eigen::VectorXd random_hop(Eigen::Index dim, std::uint64_t seed);

struct BcdTraceRow {
  int outer = 0;
  int hop = 0;
  double objective = 0;
  double min_rate_bps = 0;
  double wall_ms = 0;
};

struct BcdOptions {
  SdpOptions sdp;
  GaParams ga;
  int randomization_trials = 200;
  double beta_a = 1.0;
  std::optional<PhasePlan> initial_plan;
  bool record_timings = true;
};

struct BcdResult {
  PhasePlan plan;
  std::vector<BcdTraceRow> trace;
  double objective = 0;
  bool degenerate = false;
};

// Sweeps hops 1..N per outer iteration, replacing a hop's phases only when
// the canonical objective does not decrease. The random method draws every
// hop once and reports a flat trace.
BcdResult bcd_optimize(const ChannelSet& ch, const ScenarioConfig& cfg,
                       const std::vector<double>& zetas, Method method,
                       int k_max, std::uint64_t seed,
                       const BcdOptions& opt = {});

// Trace export: columns outer_iter, hop, method, objective, min_rate_bps,
// wall_ms.
void write_trace_csv(const std::vector<BcdTraceRow>& trace, Method method,
                     const std::string& path);

}  // namespace rismp
