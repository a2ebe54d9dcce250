// The OpenMP kernels must be bit-identical to their serial references and
// independent of the thread count.

#include <doctest.h>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "rismp/kd.hpp"
#include "rismp/phase_opt.hpp"
#include "rismp/rng.hpp"
#include "rismp/sweep.hpp"

using namespace rismp;

namespace {

HopProblem make_problem(int n, int m, std::uint64_t seed) {
  HopProblem p;
  p.hop_index = 1;
  RandomStream rs(stream_key(seed, 2024));
  for (int t = 0; t < m; ++t) {
    Eigen::VectorXcd a(n);
    for (int i = 0; i < n; ++i) a[i] = rs.complex_normal();
    p.a.push_back(a);
    p.zetas.push_back(0.5 + rs.uniform());
  }
  return p;
}

}  // namespace

TEST_CASE("candidate evaluation: parallel equals serial exactly") {
  const HopProblem p = make_problem(48, 3, 1);
  std::vector<Eigen::VectorXd> cands;
  for (int i = 0; i < 333; ++i)
    cands.push_back(random_hop(48, stream_key(2, 3, static_cast<std::uint64_t>(i))));
  const Eigen::VectorXd a = eval_candidates(p, cands);
  const Eigen::VectorXd b = eval_candidates_serial(p, cands);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("channel sampling: parallel equals serial exactly") {
  const ScenarioConfig cfg = with_elements(default_scenario(), 81);
  const ChannelSet a = sample_channels(cfg, 9);
  const ChannelSet b = sample_channels_serial(cfg, 9);
  for (std::size_t m = 0; m < a.g.size(); ++m) CHECK(a.g[m] == b.g[m]);
  for (std::size_t h = 0; h < a.hops.size(); ++h) CHECK(a.hops[h] == b.hops[h]);
}

TEST_CASE("kd gradient: parallel equals serial exactly") {
  RandomStream rs(stream_key(7, 8));
  KdBatch batch;
  const int n = 300, k = 12;
  batch.student_logits.resize(n, k);
  for (Eigen::Index i = 0; i < batch.student_logits.size(); ++i)
    batch.student_logits.data()[i] = rs.normal();
  for (int t = 0; t < 2; ++t) {
    Eigen::MatrixXd tl(n, k);
    for (Eigen::Index i = 0; i < tl.size(); ++i) tl.data()[i] = rs.normal();
    batch.teacher_logits.push_back(tl);
    batch.alignment_weights.push_back(0.2);
  }
  batch.labels_onehot = Eigen::MatrixXd::Zero(n, k);
  for (int i = 0; i < n; ++i)
    batch.labels_onehot(i, static_cast<int>(rs.uniform_index(k))) = 1.0;
  batch.temperature = 5.0;
  CHECK((kd_loss_grad(batch) - kd_loss_grad_serial(batch)).cwiseAbs().maxCoeff() ==
        0.0);
}

#ifdef _OPENMP
TEST_CASE("sweep output does not depend on the thread count") {
  ScenarioConfig cfg = default_scenario();
  cfg.elements_per_ris = {6, 6, 6};
  SweepSpec spec;
  spec.kind = SweepKind::Hops;
  spec.grid = {1, 2};
  spec.methods = {Method::Fast, Method::Sdr};
  spec.seeds = 2;
  spec.base_seed = 11;
  spec.k_max = 2;
  spec.bcd.record_timings = false;

  const std::string multi = table_to_csv(run_sweep(spec, cfg));
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const std::string single = table_to_csv(run_sweep(spec, cfg));
  omp_set_num_threads(saved);
  CHECK(multi == single);
}
#endif
