#include "rismp/phase_opt.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

#include "rismp/rng.hpp"
#include "rismp/table.hpp"

namespace rismp {

using cplx = std::complex<double>;

std::string method_name(Method m) {
  switch (m) {
    case Method::Sdr: return "sdr";
    case Method::Fast: return "fast";
    case Method::Ga: return "ga";
    case Method::Random: return "random";
  }
  return "?";
}

Method method_from_name(const std::string& name) {
  if (name == "sdr") return Method::Sdr;
  if (name == "fast") return Method::Fast;
  if (name == "ga") return Method::Ga;
  if (name == "random") return Method::Random;
  throw ValidationError("unknown method '" + name +
                        "' (expected sdr|fast|ga|random)");
}

std::vector<double> zetas_for_models(const ScenarioConfig& cfg,
                                     const std::vector<int>& model_indices,
                                     int receiver_index) {
  if (static_cast<int>(model_indices.size()) != cfg.num_cars())
    throw ValidationError("one model index per local car is required");
  const double t_kd =
      cfg.receiver_catalog.kd_flops(receiver_index) / cfg.compute_freq_flops;
  const double budget = cfg.t_max_s - t_kd;
  if (!(budget > 0))
    throw InfeasibleError(
        "KD integration time (" + std::to_string(t_kd) +
        " s) meets or exceeds the delay budget t_max_s; constraint "
        "max_m S_m/R_m + T_kd <= t_max cannot hold");
  std::vector<double> zetas(model_indices.size());
  for (std::size_t m = 0; m < model_indices.size(); ++m) {
    const double size_bits = cfg.car_catalogs[m].size_bits(model_indices[m]);
    // 2^x overflows double beyond ~1024; the clamp keeps zeta positive for
    // hopeless gain requirements instead of collapsing it to 0.
    const double expo = std::min(size_bits / (cfg.bandwidth_hz[m] * budget), 500.0);
    const double denom = std::exp2(expo) - 1.0;
    zetas[m] = cfg.tx_power_w[m] / (cfg.noise_power_w * denom);
  }
  return zetas;
}

HopProblem build_hop_problem(const ChannelSet& ch, const PhasePlan& plan,
                             int hop_1based, const std::vector<double>& zetas) {
  const int n_hops = ch.num_hops();
  if (hop_1based < 1 || hop_1based > n_hops)
    throw ValidationError("hop index out of range");
  if (static_cast<int>(plan.thetas.size()) != n_hops)
    throw ValidationError("phase plan / channel hop count mismatch");
  if (static_cast<int>(zetas.size()) != ch.num_cars())
    throw ValidationError("one zeta per transmitter is required");

  auto unit = [](const Eigen::VectorXd& theta) {
    Eigen::VectorXcd u(theta.size());
    for (Eigen::Index i = 0; i < theta.size(); ++i)
      u[i] = cplx(std::cos(theta[i]), std::sin(theta[i]));
    return u;
  };

  // h_n = H_N Theta_N ... Theta_{n+1} H_n, folded right to left.
  Eigen::RowVectorXcd h = ch.hops[static_cast<std::size_t>(n_hops - 1)].row(0);
  for (int j = n_hops - 2; j >= hop_1based - 1; --j) {
    const Eigen::VectorXcd u = unit(plan.thetas[static_cast<std::size_t>(j + 1)]);
    if (h.size() != u.size())
      throw ValidationError("phase plan / channel shape mismatch");
    h = (h.array() * u.transpose().array()).matrix() *
        ch.hops[static_cast<std::size_t>(j)];
  }

  HopProblem p;
  p.hop_index = hop_1based;
  p.zetas = zetas;
  p.a.reserve(static_cast<std::size_t>(ch.num_cars()));
  for (int m = 0; m < ch.num_cars(); ++m) {
    // g_{m,n} = H_{n-1} Theta_{n-1} ... H_1 Theta_1 g_m.
    Eigen::VectorXcd g = ch.g[static_cast<std::size_t>(m)];
    for (int j = 0; j <= hop_1based - 2; ++j) {
      const Eigen::VectorXcd u = unit(plan.thetas[static_cast<std::size_t>(j)]);
      if (g.size() != u.size())
        throw ValidationError("phase plan / channel shape mismatch");
      g = ch.hops[static_cast<std::size_t>(j)] * (u.array() * g.array()).matrix();
    }
    Eigen::VectorXcd a = (h.transpose().array() * g.array()).matrix();
    if (a.norm() == 0.0) p.degenerate = true;
    p.a.push_back(std::move(a));
  }
  return p;
}

namespace {

inline double eval_one(const HopProblem& p, const Eigen::VectorXd& thetas) {
  const Eigen::Index n = p.dim();
  Eigen::VectorXcd u(n);
  for (Eigen::Index i = 0; i < n; ++i)
    u[i] = cplx(std::cos(thetas[i]), std::sin(thetas[i]));
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < p.a.size(); ++m) {
    const cplx gain = u.transpose() * p.a[m];
    best = std::min(best, p.zetas[m] * std::norm(gain));
  }
  return best;
}

inline double wrap_2pi(double x) {
  double y = std::fmod(x, 2.0 * M_PI);
  if (y < 0) y += 2.0 * M_PI;
  if (y >= 2.0 * M_PI) y = 0.0;
  return y;
}

}  // namespace

double hop_objective(const HopProblem& p, const Eigen::VectorXd& thetas) {
  if (thetas.size() != p.dim())
    throw ValidationError("phase vector length mismatch");
  return eval_one(p, thetas);
}

Eigen::VectorXd eval_candidates_serial(const HopProblem& p,
                                       const std::vector<Eigen::VectorXd>& cands) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(cands.size()));
  for (std::size_t i = 0; i < cands.size(); ++i)
    out[static_cast<Eigen::Index>(i)] = eval_one(p, cands[i]);
  return out;
}

Eigen::VectorXd eval_candidates(const HopProblem& p,
                                const std::vector<Eigen::VectorXd>& cands) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(cands.size()));
  const std::int64_t n = static_cast<std::int64_t>(cands.size());
#ifdef _OPENMP
#pragma omp parallel for if (n >= 16) schedule(static)
#endif
  for (std::int64_t i = 0; i < n; ++i)
    out[static_cast<Eigen::Index>(i)] = eval_one(p, cands[static_cast<std::size_t>(i)]);
  return out;
}

double plan_objective(const ChannelSet& ch, const PhasePlan& plan,
                      const std::vector<double>& zetas) {
  double best = std::numeric_limits<double>::infinity();
  for (int m = 0; m < ch.num_cars(); ++m)
    best = std::min(best,
                    zetas[static_cast<std::size_t>(m)] *
                        std::norm(cascade_gain(ch, plan, m)));
  return best;
}

Eigen::VectorXd phases_from_v(const Eigen::VectorXcd& v) {
  Eigen::VectorXd thetas(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i)
    thetas[i] = wrap_2pi(-std::arg(v[i]));
  return thetas;
}

// ---------------------------------------------------------------------------
// Max-min SDP solver.
//
// The relaxation max_V min_m zeta_m tr(a_m a_m^H V) over {V >= 0, diag = 1}
// is handled in factorized form V = conj(Z) Z^T with unit rows z_j, so the
// constraints hold by construction. Each row has a closed-form maximizer of
// any fixed nonnegative mixture of the per-transmitter terms; cycling those
// updates with softmin mixture weights at an annealed temperature drives Z
// to the balanced max-min optimum (a fixed mixture alone stalls on the flat
// optimal face when several transmitters are active at the optimum). Every
// reported bound comes from a feasible dual point (diagonal d shifted by the
// most negative eigenvalue of diag(d) - A), so it upper-bounds the rank-one
// optimum no matter how accurate the search was.
// ---------------------------------------------------------------------------

namespace {

struct FactorSolver {
  const HopProblem& p;
  Eigen::Index n;
  int ntx;
  Eigen::Index pdim;
  Eigen::MatrixXcd Z;                     // n x p, unit rows
  std::vector<Eigen::RowVectorXcd> s;     // s[m] = sum_j a[m][j] Z.row(j)
  int sweeps_used = 0;

  FactorSolver(const HopProblem& prob, Eigen::Index rank, std::uint64_t key)
      : p(prob), n(prob.dim()), ntx(prob.num_tx()), pdim(rank) {
    Z.resize(n, pdim);
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index l = 0; l < pdim; ++l)
        Z(j, l) = complex_normal_at(key, static_cast<std::uint64_t>(j * pdim + l));
      Z.row(j).normalize();
    }
    recompute_s();
  }

  void recompute_s() {
    s.assign(static_cast<std::size_t>(ntx), Eigen::RowVectorXcd::Zero(pdim));
    for (int m = 0; m < ntx; ++m)
      for (Eigen::Index j = 0; j < n; ++j)
        s[static_cast<std::size_t>(m)] += p.a[static_cast<std::size_t>(m)][j] * Z.row(j);
  }

  // zeta-weighted per-transmitter values c_m.
  std::vector<double> values() const {
    std::vector<double> c(static_cast<std::size_t>(ntx));
    for (int m = 0; m < ntx; ++m)
      c[static_cast<std::size_t>(m)] =
          p.zetas[static_cast<std::size_t>(m)] * s[static_cast<std::size_t>(m)].squaredNorm();
    return c;
  }

  double min_value() const {
    const std::vector<double> c = values();
    return *std::min_element(c.begin(), c.end());
  }

  void update_row(Eigen::Index j, const std::vector<double>& omega) {
    Eigen::RowVectorXcd w = Eigen::RowVectorXcd::Zero(pdim);
    double quad = 0;
    for (int m = 0; m < ntx; ++m) {
      const cplx amj = p.a[static_cast<std::size_t>(m)][j];
      if (amj == cplx(0, 0)) continue;
      const double om = omega[static_cast<std::size_t>(m)];
      w += om * std::conj(amj) * s[static_cast<std::size_t>(m)];
      quad += om * std::norm(amj);
    }
    w -= quad * Z.row(j);
    const double wn = w.norm();
    if (!(wn > 0)) return;
    const Eigen::RowVectorXcd z_new = w / wn;
    for (int m = 0; m < ntx; ++m) {
      const cplx amj = p.a[static_cast<std::size_t>(m)][j];
      if (amj != cplx(0, 0))
        s[static_cast<std::size_t>(m)] += amj * (z_new - Z.row(j));
    }
    Z.row(j) = z_new;
  }

  // One cyclic pass of row updates for fixed weights omega_m = lambda_m zeta_m.
  void sweep(const std::vector<double>& omega) {
    for (Eigen::Index j = 0; j < n; ++j) update_row(j, omega);
    ++sweeps_used;
  }

  // One pass with the mixture recomputed per row from the softmin of the
  // current per-transmitter values at temperature mu.
  void sweep_softmin(double mu) {
    std::vector<double> omega(static_cast<std::size_t>(ntx));
    for (Eigen::Index j = 0; j < n; ++j) {
      const std::vector<double> c = values();
      const double cmin = *std::min_element(c.begin(), c.end());
      double total = 0;
      for (int m = 0; m < ntx; ++m) {
        omega[static_cast<std::size_t>(m)] =
            std::exp(-(c[static_cast<std::size_t>(m)] - cmin) / std::max(mu, 1e-300));
        total += omega[static_cast<std::size_t>(m)];
      }
      for (int m = 0; m < ntx; ++m)
        omega[static_cast<std::size_t>(m)] *=
            p.zetas[static_cast<std::size_t>(m)] / total;
      update_row(j, omega);
    }
    ++sweeps_used;
  }

  double weighted_value(const std::vector<double>& omega) const {
    double v = 0;
    for (int m = 0; m < ntx; ++m)
      v += omega[static_cast<std::size_t>(m)] *
           s[static_cast<std::size_t>(m)].squaredNorm();
    return v;
  }

  // Ascend the omega-weighted objective until stationary or the sweep cap.
  void solve_weighted(const std::vector<double>& omega, int max_sweeps) {
    double prev = weighted_value(omega);
    for (int it = 0; it < max_sweeps; ++it) {
      sweep(omega);
      const double cur = weighted_value(omega);
      if (it > 0 && cur - prev <= 1e-14 * std::max(1.0, std::abs(cur))) break;
      prev = cur;
    }
    recompute_s();  // clear incremental drift
  }

  Eigen::MatrixXcd matrix() const { return Z.conjugate() * Z.transpose(); }
};

std::vector<double> mix_weights(const std::vector<double>& lambda,
                                const std::vector<double>& zetas) {
  std::vector<double> omega(lambda.size());
  for (std::size_t m = 0; m < lambda.size(); ++m) omega[m] = lambda[m] * zetas[m];
  return omega;
}

// Exact dual value of the fixed-mixture inner problem
//   min sum_i d_i  s.t.  diag(d) >= A(lambda),  A = B B^H,
// where B has columns sqrt(lambda_m zeta_m) a_m. With d > 0 the PSD
// constraint is the Schur complement condition
// lambda_max(B^H diag(1/d) B) <= 1, so bound(d) = rho(d) * sum(d) with
// rho the top eigenvalue of that M x M matrix is feasible for every
// positive d (the bound is invariant to scaling d). The KKT condition
// d_i = |r_i^H u| (r_i the i-th row of B, u the top eigenvector) gives a
// fixed-point iteration; the minimum over the iterates is kept, so the
// returned value is a certified upper bound regardless of convergence.
double dual_bound(const HopProblem& p, const std::vector<double>& lambda) {
  const Eigen::Index n = p.dim();
  const int ntx = p.num_tx();
  Eigen::MatrixXcd b(n, ntx);
  for (int m = 0; m < ntx; ++m)
    b.col(m) = std::sqrt(std::max(0.0, lambda[static_cast<std::size_t>(m)] *
                                           p.zetas[static_cast<std::size_t>(m)])) *
               p.a[static_cast<std::size_t>(m)];

  const Eigen::VectorXd row_norm = b.rowwise().norm();
  if (!(row_norm.maxCoeff() > 0)) return 0.0;

  // Zero rows take d_i = 0 and drop out of the Schur term.
  std::vector<Eigen::Index> active;
  for (Eigen::Index i = 0; i < n; ++i)
    if (row_norm[i] > 0) active.push_back(i);

  Eigen::VectorXd d = row_norm;
  double best = std::numeric_limits<double>::infinity();

  // Evaluate rho(d) * sum(d) and return the top eigenvector for gradients.
  auto evaluate = [&](const Eigen::VectorXd& dv, Eigen::VectorXcd& u_out) {
    Eigen::MatrixXcd small = Eigen::MatrixXcd::Zero(ntx, ntx);
    for (Eigen::Index i : active)
      small.noalias() += b.row(i).adjoint() * b.row(i) / dv[i];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(small);
    const double rho = es.eigenvalues().maxCoeff() * (1.0 + 1e-13);
    u_out = es.eigenvectors().col(ntx - 1);
    double sum = 0;
    for (Eigen::Index i : active) sum += dv[i];
    return rho * sum;
  };

  Eigen::VectorXcd u;
  double f = evaluate(d, u);
  best = std::min(best, f);

  for (int it = 0; it < 120; ++it) {
    // Fixed-point candidate from the stationarity condition d_i = |r_i^H u|.
    Eigen::VectorXd d_fp = (b * u).cwiseAbs();
    double fp_max = 0;
    for (Eigen::Index i : active) fp_max = std::max(fp_max, d_fp[i]);
    for (Eigen::Index i : active) d_fp[i] = std::max(d_fp[i], 1e-14 * fp_max);
    Eigen::VectorXcd u_fp;
    const double f_fp = evaluate(d_fp, u_fp);

    // Descent step in log(d); rho * sum(d) is scale invariant, so the
    // radial direction drops out of the line search by itself.
    double sum = 0;
    for (Eigen::Index i : active) sum += d[i];
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(n);
    const Eigen::VectorXd bu = (b * u).cwiseAbs();
    const double rho_cur = f / std::max(sum, 1e-300);
    for (Eigen::Index i : active)
      grad[i] = rho_cur * d[i] - sum * bu[i] * bu[i] / d[i];
    const double gscale = grad.cwiseAbs().maxCoeff();

    double f_gd = std::numeric_limits<double>::infinity();
    Eigen::VectorXd d_gd = d;
    Eigen::VectorXcd u_gd;
    if (gscale > 0) {
      double step = 0.5;
      for (int ls = 0; ls < 12; ++ls) {
        Eigen::VectorXd trial = d;
        for (Eigen::Index i : active)
          trial[i] = d[i] * std::exp(-step * grad[i] / (gscale + 1e-300));
        Eigen::VectorXcd u_trial;
        const double f_trial = evaluate(trial, u_trial);
        if (f_trial < f) {
          f_gd = f_trial;
          d_gd = trial;
          u_gd = u_trial;
          break;
        }
        step *= 0.5;
      }
    }

    double f_next;
    if (f_fp <= f_gd) {
      f_next = f_fp;
      d = d_fp;
      u = u_fp;
    } else {
      f_next = f_gd;
      d = d_gd;
      u = u_gd;
    }
    if (!(f_next < std::numeric_limits<double>::infinity())) break;
    const bool progress = f_next < best - 1e-14 * std::max(1.0, best);
    best = std::min(best, f_next);
    f = f_next;
    if (!progress && it > 4) break;
  }
  return best;
}

std::vector<double> softmin_weights(const std::vector<double>& c, double mu) {
  const double cmin = *std::min_element(c.begin(), c.end());
  std::vector<double> lam(c.size());
  double total = 0;
  for (std::size_t m = 0; m < c.size(); ++m) {
    lam[m] = std::exp(-(c[m] - cmin) / std::max(mu, 1e-300));
    total += lam[m];
  }
  for (double& l : lam) l /= total;
  return lam;
}

}  // namespace

SdpSolution sdp_maxmin(const HopProblem& p, const SdpOptions& opt) {
  const Eigen::Index n = p.dim();
  const int ntx = p.num_tx();
  if (ntx < 1) throw ValidationError("hop problem needs at least one transmitter");
  if (n < 1) throw ValidationError("hop problem needs at least one element");

  SdpSolution sol;
  if (p.degenerate) {
    // Some transmitter sees a zero vector: the max-min objective is 0 for
    // every phase choice; any feasible V is optimal.
    sol.V = Eigen::MatrixXcd::Identity(n, n);
    sol.upper_bound = 0.0;
    sol.converged = true;
    return sol;
  }

  Eigen::Index rank = opt.rank > 0
                          ? std::min<Eigen::Index>(opt.rank, n)
                          : std::min<Eigen::Index>(
                                n, static_cast<Eigen::Index>(
                                       std::ceil(std::sqrt(2.0 * static_cast<double>(n)))) +
                                       1);
  rank = std::max<Eigen::Index>(rank, std::min<Eigen::Index>(n, ntx + 1));

  // Candidate pool for the final convex recombination. The objective is
  // linear in V, so any mixture of feasible candidates is feasible and its
  // per-transmitter values mix linearly; when the optimum sits on a flat
  // face spanned by extreme points, the balanced optimum is recovered
  // exactly by the best two-candidate combination.
  struct Candidate {
    Eigen::MatrixXcd V;
    std::vector<double> c;
  };
  std::vector<Candidate> candidates;
  auto snapshot = [&](FactorSolver& f) {
    f.recompute_s();
    candidates.push_back({f.matrix(), f.values()});
  };

  double best_bound = std::numeric_limits<double>::infinity();
  int sweeps_total = 0;

  auto best_recombination = [&](Eigen::MatrixXcd& v_out) {
    double best_val = -std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 0;
    double bt = 1.0;
    auto value_at = [&](const Candidate& a, const Candidate& b, double t) {
      double v = std::numeric_limits<double>::infinity();
      for (int m = 0; m < ntx; ++m)
        v = std::min(v, t * a.c[static_cast<std::size_t>(m)] +
                            (1.0 - t) * b.c[static_cast<std::size_t>(m)]);
      return v;
    };
    for (std::size_t i = 0; i < candidates.size(); ++i)
      for (std::size_t j = i; j < candidates.size(); ++j) {
        const Candidate& a = candidates[i];
        const Candidate& b = candidates[j];
        std::vector<double> probes = {0.0, 1.0};
        for (int m1 = 0; m1 < ntx; ++m1)
          for (int m2 = m1 + 1; m2 < ntx; ++m2) {
            // Crossing of the two value lines in t.
            const double da = a.c[static_cast<std::size_t>(m1)] -
                              a.c[static_cast<std::size_t>(m2)];
            const double db = b.c[static_cast<std::size_t>(m1)] -
                              b.c[static_cast<std::size_t>(m2)];
            if (da == db) continue;
            const double t = -db / (da - db);
            if (t > 0.0 && t < 1.0) probes.push_back(t);
          }
        for (double t : probes) {
          const double v = value_at(a, b, t);
          if (v > best_val) {
            best_val = v;
            bi = i;
            bj = j;
            bt = t;
          }
        }
      }
    if (!candidates.empty())
      v_out = bt * candidates[bi].V + (1.0 - bt) * candidates[bj].V;
    return best_val;
  };

  double best_primal = -std::numeric_limits<double>::infinity();
  Eigen::MatrixXcd best_V;

  for (int restart = 0; restart < 3; ++restart) {
    FactorSolver fs(p, rank,
                    stream_key(opt.seed, kTagSdpInit,
                               static_cast<std::uint64_t>(p.hop_index),
                               static_cast<std::uint64_t>(restart)));

    if (ntx == 1) {
      fs.solve_weighted(mix_weights({1.0}, p.zetas),
                        std::min(2000, opt.max_sweeps));
      snapshot(fs);
      best_bound = std::min(best_bound, dual_bound(p, {1.0}));
    } else {
      // Annealed softmin ascent toward the balanced max-min point. A hard
      // argmin mixture flip-flops once several transmitters tie, so the
      // temperature floor stays well above the oscillation band and the
      // recombination step below removes the remaining imbalance.
      fs.sweep(mix_weights(
          std::vector<double>(static_cast<std::size_t>(ntx),
                              1.0 / static_cast<double>(ntx)),
          p.zetas));
      const std::vector<double> c0 = fs.values();
      double cmax = *std::max_element(c0.begin(), c0.end());
      if (!(cmax > 0)) cmax = 1.0;
      double mu = cmax;
      const double mu_min = 1e-8 * cmax;
      double prev = -std::numeric_limits<double>::infinity();
      int stall = 0;
      while (fs.sweeps_used < opt.max_sweeps / 2) {
        fs.sweep_softmin(mu);
        if (fs.sweeps_used % 32 == 0) fs.recompute_s();
        mu = std::max(mu * 0.92, mu_min);
        const double cur = fs.min_value();
        if (mu == mu_min) {
          if (cur - prev <= 1e-13 * std::max(1.0, std::abs(cur))) {
            if (++stall >= 3) break;
          } else {
            stall = 0;
          }
        }
        prev = cur;
      }
      snapshot(fs);
      best_bound = std::min(
          best_bound,
          dual_bound(p, softmin_weights(fs.values(), mu_min)));
    }
    sweeps_total += fs.sweeps_used;

    best_primal = std::max(best_primal, best_recombination(best_V));
    auto gap_ok = [&]() {
      return best_bound - best_primal <=
             opt.tol * std::max(1.0, std::abs(best_bound));
    };
    if (gap_ok()) break;

    if (ntx >= 2) {
      // Tighten the dual side: the certified bound is convex in the mixture.
      // Fixed-mixture solves also produce the extreme optima the
      // recombination needs, so snapshot each of them.
      FactorSolver fb(p, rank,
                      stream_key(opt.seed, kTagSdpInit,
                                 static_cast<std::uint64_t>(p.hop_index),
                                 1000 + static_cast<std::uint64_t>(restart)));
      fb.Z = fs.Z;
      fb.recompute_s();
      const std::vector<double> lambda = softmin_weights(
          fs.values(), 1e-8 * std::max(1.0, fs.min_value()));
      auto eval_mix = [&](const std::vector<double>& lam) {
        fb.solve_weighted(mix_weights(lam, p.zetas), 250);
        snapshot(fb);
        const double b = dual_bound(p, lam);
        best_bound = std::min(best_bound, b);
        return b;
      };
      if (ntx == 2) {
        const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
        double lo = 0.0, hi = 1.0;
        double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
        double f1 = eval_mix({x1, 1.0 - x1});
        double f2 = eval_mix({x2, 1.0 - x2});
        for (int it = 0; it < 24; ++it) {
          best_primal = std::max(best_primal, best_recombination(best_V));
          if (gap_ok()) break;
          if (f1 <= f2) {
            hi = x2; x2 = x1; f2 = f1;
            x1 = hi - gr * (hi - lo);
            f1 = eval_mix({x1, 1.0 - x1});
          } else {
            lo = x1; x1 = x2; f1 = f2;
            x2 = lo + gr * (hi - lo);
            f2 = eval_mix({x2, 1.0 - x2});
          }
        }
      } else {
        // Perturb the converged mixture toward each transmitter in turn.
        for (int m = 0; m < ntx && !gap_ok(); ++m) {
          std::vector<double> lam = lambda;
          double total = 0;
          lam[static_cast<std::size_t>(m)] += 0.25;
          for (double l : lam) total += l;
          for (double& l : lam) l /= total;
          eval_mix(lam);
          best_primal = std::max(best_primal, best_recombination(best_V));
        }
      }
      sweeps_total += fb.sweeps_used;
    }

    best_primal = std::max(best_primal, best_recombination(best_V));
    if (gap_ok()) break;
  }

  sol.V = best_V;
  sol.upper_bound = best_bound;
  sol.sweeps = sweeps_total;
  sol.converged =
      best_bound - best_primal <= opt.tol * std::max(1.0, std::abs(best_bound));
  if (!sol.converged)
    throw NonConvergence(
        "sdp_maxmin: certified gap " + std::to_string(best_bound - best_primal) +
            " above tolerance after " + std::to_string(sweeps_total) + " sweeps",
        sol);
  return sol;
}

void extract_rank_one(SdpSolution& sol, const HopProblem& p, int trials,
                      std::uint64_t seed) {
  const Eigen::Index n = sol.V.rows();
  if (p.dim() != n) throw ValidationError("solution / problem size mismatch");

  if (p.degenerate) {
    sol.extracted_phases = Eigen::VectorXd::Zero(n);
    sol.achieved_value = 0.0;
    sol.randomization_trials = trials;
    return;
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(sol.V);
  Eigen::VectorXd eig = es.eigenvalues().cwiseMax(0.0);
  const Eigen::MatrixXcd W = es.eigenvectors() * eig.cwiseSqrt().asDiagonal();

  std::vector<Eigen::VectorXd> cands;
  cands.reserve(static_cast<std::size_t>(trials) + 1);
  // Deterministic base candidate: principal-eigenvector rounding.
  cands.push_back(phases_from_v(es.eigenvectors().col(n - 1)));
  const std::uint64_t key = stream_key(seed, kTagRandomization,
                                       static_cast<std::uint64_t>(p.hop_index));
  for (int t = 0; t < trials; ++t) {
    Eigen::VectorXcd r(n);
    for (Eigen::Index i = 0; i < n; ++i)
      r[i] = complex_normal_at(key, static_cast<std::uint64_t>(i),
                               static_cast<std::uint64_t>(t));
    cands.push_back(phases_from_v(W * r));
  }

  const Eigen::VectorXd vals = eval_candidates(p, cands);
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < vals.size(); ++i)
    if (vals[i] > vals[best]) best = i;  // first index wins ties

  sol.extracted_phases = cands[static_cast<std::size_t>(best)];
  sol.achieved_value = vals[best];
  sol.randomization_trials = trials;
}

Eigen::VectorXd fast_hop(const HopProblem& p, double beta_a) {
  const Eigen::Index n = p.dim();
  if (p.num_tx() < 1) throw ValidationError("hop problem needs at least one transmitter");
  bool any_nonzero = false;
  for (const Eigen::VectorXcd& a : p.a)
    if (a.norm() > 0) any_nonzero = true;
  if (!any_nonzero)
    throw ValidationError("fast rule undefined: every effective vector is zero");

  Eigen::VectorXd thetas(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    cplx acc(0, 0);
    for (int m = 0; m < p.num_tx(); ++m) {
      const cplx ami = p.a[static_cast<std::size_t>(m)][i];
      const double mag = std::abs(ami);
      if (mag == 0.0) continue;
      acc += ami / (p.zetas[static_cast<std::size_t>(m)] * std::pow(mag, beta_a));
    }
    thetas[i] = wrap_2pi(-std::arg(acc));
  }
  return thetas;
}

Eigen::VectorXd random_hop(Eigen::Index dim, std::uint64_t seed) {
  RandomStream rs(stream_key(seed, kTagRandomHop));
  Eigen::VectorXd thetas(dim);
  for (Eigen::Index i = 0; i < dim; ++i) thetas[i] = rs.uniform(0.0, 2.0 * M_PI);
  return thetas;
}

Eigen::VectorXd ga_hop(const HopProblem& p, const GaParams& params,
                       std::uint64_t seed) {
  const Eigen::Index n = p.dim();
  RandomStream rs(stream_key(seed, kTagGa, static_cast<std::uint64_t>(p.hop_index)));

  std::vector<Eigen::VectorXd> pop(static_cast<std::size_t>(params.population));
  for (Eigen::VectorXd& ind : pop) {
    ind.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) ind[i] = rs.uniform(0.0, 2.0 * M_PI);
  }
  Eigen::VectorXd fit = eval_candidates(p, pop);

  auto best_of = [&](const Eigen::VectorXd& values) {
    Eigen::Index b = 0;
    for (Eigen::Index i = 1; i < values.size(); ++i)
      if (values[i] > values[b]) b = i;
    return b;
  };

  Eigen::Index best_idx = best_of(fit);
  Eigen::VectorXd best_ind = pop[static_cast<std::size_t>(best_idx)];
  double best_fit = fit[best_idx];

  auto tournament = [&]() {
    std::size_t winner = static_cast<std::size_t>(
        rs.uniform_index(static_cast<std::uint64_t>(params.population)));
    for (int t = 1; t < params.tournament; ++t) {
      const std::size_t rival = static_cast<std::size_t>(
          rs.uniform_index(static_cast<std::uint64_t>(params.population)));
      if (fit[static_cast<Eigen::Index>(rival)] > fit[static_cast<Eigen::Index>(winner)])
        winner = rival;
    }
    return winner;
  };

  for (int gen = 0; gen < params.generations; ++gen) {
    std::vector<Eigen::VectorXd> next;
    next.reserve(pop.size());
    next.push_back(best_ind);  // elitism
    while (next.size() < pop.size()) {
      const Eigen::VectorXd& pa = pop[tournament()];
      const Eigen::VectorXd& pb = pop[tournament()];
      Eigen::VectorXd child(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        // Blend along the shortest angular path.
        const double d = std::remainder(pb[i] - pa[i], 2.0 * M_PI);
        child[i] = wrap_2pi(pa[i] + rs.uniform() * d);
      }
      for (Eigen::Index i = 0; i < n; ++i)
        if (rs.uniform() < params.mutation_rate)
          child[i] = wrap_2pi(child[i] + params.mutation_sigma * rs.normal());
      next.push_back(std::move(child));
    }
    pop = std::move(next);
    fit = eval_candidates(p, pop);
    const Eigen::Index b = best_of(fit);
    if (fit[b] > best_fit) {
      best_fit = fit[b];
      best_ind = pop[static_cast<std::size_t>(b)];
    }
  }
  return best_ind;
}

BcdResult bcd_optimize(const ChannelSet& ch, const ScenarioConfig& cfg,
                       const std::vector<double>& zetas, Method method,
                       int k_max, std::uint64_t seed, const BcdOptions& opt) {
  if (k_max < 1) throw ValidationError("k_max must be >= 1");
  for (double z : zetas)
    if (!(z > 0) || !std::isfinite(z))
      throw InfeasibleError("zeta weights must be positive and finite");

  BcdResult res;
  res.plan = opt.initial_plan ? *opt.initial_plan : random_plan(cfg, seed);
  res.plan.validate_against(cfg);
  res.objective = plan_objective(ch, res.plan, zetas);

  const int n_hops = ch.num_hops();
  auto min_rate = [&]() {
    const std::vector<double> r = rates_for_plan(ch, res.plan, cfg);
    return *std::min_element(r.begin(), r.end());
  };

  if (method == Method::Random) {
    // Draws every hop once; the trace is flat by construction.
    const auto t0 = std::chrono::steady_clock::now();
    for (int h = 0; h < n_hops; ++h)
      res.plan.thetas[static_cast<std::size_t>(h)] = random_hop(
          res.plan.thetas[static_cast<std::size_t>(h)].size(),
          stream_key(seed, kTagRandomHop, static_cast<std::uint64_t>(h)));
    res.objective = plan_objective(ch, res.plan, zetas);
    const double rate = min_rate();
    double wall = 0;
    if (opt.record_timings)
      wall = std::chrono::duration<double, std::milli>(
                 std::chrono::steady_clock::now() - t0)
                 .count();
    for (int k = 1; k <= k_max; ++k)
      for (int h = 1; h <= n_hops; ++h)
        res.trace.push_back({k, h, res.objective, rate, k == 1 && h == 1 ? wall : 0.0});
    return res;
  }

  for (int k = 1; k <= k_max; ++k) {
    for (int h = 1; h <= n_hops; ++h) {
      const auto t0 = std::chrono::steady_clock::now();
      const HopProblem prob = build_hop_problem(ch, res.plan, h, zetas);
      if (prob.degenerate) {
        res.degenerate = true;
      } else {
        Eigen::VectorXd cand;
        const std::uint64_t step_seed =
            stream_key(seed, 0xB0D0, static_cast<std::uint64_t>(k),
                       static_cast<std::uint64_t>(h));
        switch (method) {
          case Method::Sdr: {
            SdpOptions sopt = opt.sdp;
            sopt.seed = step_seed;
            SdpSolution sol = sdp_maxmin(prob, sopt);
            extract_rank_one(sol, prob, opt.randomization_trials, step_seed);
            cand = sol.extracted_phases;
            break;
          }
          case Method::Fast:
            cand = fast_hop(prob, opt.beta_a);
            break;
          case Method::Ga:
            cand = ga_hop(prob, opt.ga, step_seed);
            break;
          case Method::Random:
            break;
        }
        PhasePlan trial = res.plan;
        trial.thetas[static_cast<std::size_t>(h - 1)] = cand;
        const double trial_obj = plan_objective(ch, trial, zetas);
        if (trial_obj >= res.objective) {
          res.plan = std::move(trial);
          res.objective = trial_obj;
        }
      }
      double wall = 0;
      if (opt.record_timings)
        wall = std::chrono::duration<double, std::milli>(
                   std::chrono::steady_clock::now() - t0)
                   .count();
      res.trace.push_back({k, h, res.objective, min_rate(), wall});
    }
  }
  return res;
}

void write_trace_csv(const std::vector<BcdTraceRow>& trace, Method method,
                     const std::string& path) {
  ResultTable t;
  t.columns = {"outer_iter", "hop", "method", "objective", "min_rate_bps",
               "wall_ms"};
  for (const BcdTraceRow& row : trace)
    t.rows.push_back({static_cast<std::int64_t>(row.outer),
                      static_cast<std::int64_t>(row.hop), method_name(method),
                      row.objective, row.min_rate_bps, row.wall_ms});
  write_table(t, path, TableFormat::Csv);
}

}  // namespace rismp
