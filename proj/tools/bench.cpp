// Timing comparison of the OpenMP kernels against their serial references.
// Prints one CSV row per kernel: name, size, serial_ms, parallel_ms, speedup,
// max_abs_diff (the diff must be exactly zero; the parallel paths are
// required to be bit-identical).

#include <chrono>
#include <iostream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "rismp/kd.hpp"
#include "rismp/phase_opt.hpp"
#include "rismp/rng.hpp"
#include "rismp/sweep.hpp"

using namespace rismp;

namespace {

double ms_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - t0)
      .count();
}

template <typename F>
double time_best_of(int reps, F&& fn) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    best = std::min(best, ms_since(t0));
  }
  return best;
}

void row(const std::string& name, const std::string& size, double serial_ms,
         double parallel_ms, double diff) {
  std::cout << name << "," << size << "," << serial_ms << "," << parallel_ms
            << "," << serial_ms / parallel_ms << "," << diff << "\n";
}

HopProblem make_problem(int n, int m, std::uint64_t seed) {
  HopProblem p;
  p.hop_index = 1;
  for (int i = 0; i < m; ++i) {
    RandomStream rs(stream_key(seed, 7, static_cast<std::uint64_t>(i)));
    Eigen::VectorXcd a(n);
    for (int j = 0; j < n; ++j) a[j] = rs.complex_normal();
    p.a.push_back(a);
    p.zetas.push_back(1.0 + 0.5 * i);
  }
  return p;
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::cout << "# threads=" << omp_get_max_threads() << "\n";
#else
  std::cout << "# threads=1 (OpenMP disabled)\n";
#endif
  std::cout << "kernel,size,serial_ms,parallel_ms,speedup,max_abs_diff\n";

  {
    const HopProblem p = make_problem(64, 2, 11);
    std::vector<Eigen::VectorXd> cands;
    for (int i = 0; i < 4096; ++i)
      cands.push_back(random_hop(64, stream_key(3, 9, static_cast<std::uint64_t>(i))));
    Eigen::VectorXd a, b;
    const double ts = time_best_of(5, [&] { a = eval_candidates_serial(p, cands); });
    const double tp = time_best_of(5, [&] { b = eval_candidates(p, cands); });
    row("eval_candidates", "n=64,M=2,cands=4096", ts, tp,
        (a - b).cwiseAbs().maxCoeff());
  }

  {
    const ScenarioConfig cfg = with_elements(default_scenario(), 81);
    ChannelSet a, b;
    const double ts = time_best_of(5, [&] { a = sample_channels_serial(cfg, 42); });
    const double tp = time_best_of(5, [&] { b = sample_channels(cfg, 42); });
    double diff = 0;
    for (std::size_t h = 0; h < a.hops.size(); ++h)
      diff = std::max(diff, (a.hops[h] - b.hops[h]).cwiseAbs().maxCoeff());
    row("sample_channels", "3x81 elements", ts, tp, diff);
  }

  {
    RandomStream rs(stream_key(5, 1));
    KdBatch batch;
    const int n = 4096, k = 16;
    batch.student_logits.resize(n, k);
    for (Eigen::Index i = 0; i < batch.student_logits.size(); ++i)
      batch.student_logits.data()[i] = rs.normal();
    for (int t = 0; t < 2; ++t) {
      Eigen::MatrixXd tl(n, k);
      for (Eigen::Index i = 0; i < tl.size(); ++i) tl.data()[i] = rs.normal();
      batch.teacher_logits.push_back(tl);
      batch.alignment_weights.push_back(0.25);
    }
    batch.labels_onehot = Eigen::MatrixXd::Zero(n, k);
    for (int i = 0; i < n; ++i)
      batch.labels_onehot(i, static_cast<int>(rs.uniform_index(k))) = 1.0;
    batch.temperature = 4.0;
    Eigen::MatrixXd a, b;
    const double ts = time_best_of(5, [&] { a = kd_loss_grad_serial(batch); });
    const double tp = time_best_of(5, [&] { b = kd_loss_grad(batch); });
    row("kd_loss_grad", "n=4096,K=16,T=2", ts, tp, (a - b).cwiseAbs().maxCoeff());
  }

  {
    // Whole-sweep dispatch: grid points x seeds across the worker pool.
    const ScenarioConfig cfg = default_scenario();
    SweepSpec spec;
    spec.kind = SweepKind::Hops;
    spec.grid = {1, 2, 3};
    spec.methods = {Method::Fast};
    spec.seeds = 4;
    spec.k_max = 2;
    spec.bcd.record_timings = false;
    ResultTable par;
    const double tp = time_best_of(1, [&] { par = run_sweep(spec, cfg); });
#ifdef _OPENMP
    const int saved = omp_get_max_threads();
    omp_set_num_threads(1);
#endif
    ResultTable ser;
    const double ts = time_best_of(1, [&] { ser = run_sweep(spec, cfg); });
#ifdef _OPENMP
    omp_set_num_threads(saved);
#endif
    const double diff = table_to_csv(ser) == table_to_csv(par) ? 0.0 : 1.0;
    row("run_sweep", "hops{1,2,3},fast,seeds=4", ts, tp, diff);
  }

  return 0;
}
