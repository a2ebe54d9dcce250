#include <doctest.h>

#include <Eigen/Dense>
#include <cstdio>
#include <filesystem>

#include "rismp/channel.hpp"
#include "rismp/rng.hpp"

using namespace rismp;
using cplx = std::complex<double>;

namespace {

// Independent oracle: materialize every Theta_i as a diagonal matrix and take
// the explicit product H_N Theta_N ... H_1 Theta_1 g with Eigen.
cplx naive_cascade(const ChannelSet& ch, const PhasePlan& plan, int car) {
  Eigen::MatrixXcd acc =
      Eigen::MatrixXcd::Identity(ch.g[car].size(), ch.g[car].size());
  for (int i = 0; i < ch.num_hops(); ++i) {
    const Eigen::VectorXd& theta = plan.thetas[i];
    Eigen::MatrixXcd diag = Eigen::MatrixXcd::Zero(theta.size(), theta.size());
    for (Eigen::Index j = 0; j < theta.size(); ++j)
      diag(j, j) = std::exp(cplx(0, theta[j]));
    acc = (ch.hops[i] * diag * acc).eval();
  }
  const Eigen::VectorXcd y = acc * ch.g[car];
  return y[0];
}

ChannelSet random_chain(const std::vector<int>& elems, int cars,
                        std::uint64_t seed) {
  ChannelSet ch;
  ch.seed = seed;
  RandomStream rs(stream_key(seed, 111));
  for (int m = 0; m < cars; ++m) {
    Eigen::VectorXcd g(elems.front());
    for (Eigen::Index i = 0; i < g.size(); ++i) g[i] = rs.complex_normal();
    ch.g.push_back(g);
  }
  for (std::size_t h = 0; h < elems.size(); ++h) {
    const int rows = h + 1 == elems.size() ? 1 : elems[h + 1];
    Eigen::MatrixXcd m(rows, elems[h]);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rs.complex_normal();
    ch.hops.push_back(m);
  }
  return ch;
}

PhasePlan random_plan_for(const ChannelSet& ch, std::uint64_t seed) {
  PhasePlan plan;
  RandomStream rs(stream_key(seed, 222));
  for (const Eigen::MatrixXcd& h : ch.hops) {
    Eigen::VectorXd t(h.cols());
    for (Eigen::Index i = 0; i < t.size(); ++i)
      t[i] = rs.uniform(0.0, 2.0 * M_PI);
    plan.thetas.push_back(t);
  }
  return plan;
}

}  // namespace

TEST_CASE("cascade gain: identity chain") {
  ChannelSet ch;
  ch.g = {Eigen::VectorXcd::Ones(1)};
  ch.hops = {Eigen::MatrixXcd::Ones(1, 1)};
  PhasePlan plan;
  plan.thetas = {Eigen::VectorXd::Zero(1)};
  CHECK(cascade_gain(ch, plan, 0) == cplx(1.0, 0.0));
}

TEST_CASE("cascade gain: phase flip aligns a sign-flipped entry") {
  ChannelSet ch;
  Eigen::VectorXcd g(2);
  g << cplx(1, 0), cplx(-1, 0);
  ch.g = {g};
  ch.hops = {Eigen::MatrixXcd::Ones(1, 2)};
  PhasePlan plan;
  Eigen::VectorXd theta(2);
  theta << 0.0, M_PI;
  plan.thetas = {theta};
  const cplx gain = cascade_gain(ch, plan, 0);
  CHECK(std::abs(gain - cplx(2.0, 0.0)) < 1e-12);
}

TEST_CASE("cascade gain matches the naive product oracle") {
  RandomStream shape_rs(stream_key(7, 1));
  for (int trial = 0; trial < 50; ++trial) {
    const int hops = 1 + static_cast<int>(shape_rs.uniform_index(4));
    std::vector<int> elems;
    for (int h = 0; h < hops; ++h)
      elems.push_back(1 + static_cast<int>(shape_rs.uniform_index(8)));
    const ChannelSet ch = random_chain(elems, 2, 1000 + trial);
    const PhasePlan plan = random_plan_for(ch, 2000 + trial);
    for (int m = 0; m < 2; ++m) {
      const cplx fast = cascade_gain(ch, plan, m);
      const cplx slow = naive_cascade(ch, plan, m);
      CHECK(std::abs(fast - slow) <= 1e-12 * std::max(1.0, std::abs(slow)));
    }
  }
}

TEST_CASE("global rotation of the last hop rotates the gain exactly") {
  const ChannelSet ch = random_chain({5, 6, 4}, 1, 99);
  PhasePlan plan = random_plan_for(ch, 98);
  const cplx base = cascade_gain(ch, plan, 0);
  const double phi = 1.234;
  for (Eigen::Index i = 0; i < plan.thetas.back().size(); ++i)
    plan.thetas.back()[i] = std::fmod(plan.thetas.back()[i] + phi, 2.0 * M_PI);
  const cplx rotated = cascade_gain(ch, plan, 0);
  const cplx expected = base * std::exp(cplx(0, phi));
  CHECK(std::abs(rotated - expected) <= 1e-12 * std::abs(base));
  CHECK(std::abs(std::abs(rotated) - std::abs(base)) <= 1e-12 * std::abs(base));
}

TEST_CASE("sampling is deterministic and thread-count independent") {
  const ScenarioConfig cfg = default_scenario();
  const ChannelSet a = sample_channels(cfg, 5);
  const ChannelSet b = sample_channels(cfg, 5);
  const ChannelSet c = sample_channels_serial(cfg, 5);
  for (int m = 0; m < cfg.num_cars(); ++m) {
    CHECK(a.g[m] == b.g[m]);
    CHECK(a.g[m] == c.g[m]);
  }
  for (int h = 0; h < cfg.num_ris(); ++h) {
    CHECK(a.hops[h] == b.hops[h]);
    CHECK(a.hops[h] == c.hops[h]);
  }
  const ChannelSet d = sample_channels(cfg, 6);
  CHECK(a.hops[0] != d.hops[0]);
}

TEST_CASE("infinite Rician factor reduces to the LoS component") {
  ScenarioConfig cfg = default_scenario();
  cfg.rician_factor_h = 1e12;
  cfg.rician_factor_g = 1e12;
  const ChannelSet ch = sample_channels(cfg, 3);
  // The LoS outer product has rank one and unit-modulus entries, so every
  // entry magnitude equals the segment's path-loss amplitude.
  const auto dists = segment_distances(cfg);
  for (int h = 0; h < cfg.num_ris(); ++h) {
    const double amp = path_loss_amplitude(dists[0][h + 1], cfg);
    for (Eigen::Index i = 0; i < ch.hops[h].size(); ++i)
      CHECK(std::abs(ch.hops[h].data()[i]) ==
            doctest::Approx(amp).epsilon(1e-5));
    CHECK(Eigen::JacobiSVD<Eigen::MatrixXcd>(ch.hops[h])
              .singularValues()
              .tail(std::max<Eigen::Index>(ch.hops[h].rows() - 1, 0))
              .norm() < 1e-5 * amp * ch.hops[h].size());
  }
}

TEST_CASE("zero Rician factor gives zero-mean entries") {
  ScenarioConfig cfg = default_scenario();
  cfg.rician_factor_h = 0.0;
  cfg.elements_per_ris = {64, 64, 64};
  cplx mean{0, 0};
  int count = 0;
  const auto dists = segment_distances(cfg);
  const double amp = path_loss_amplitude(dists[0][1], cfg);
  for (int seed = 0; seed < 3; ++seed) {
    const ChannelSet ch = sample_channels(cfg, 100 + seed);
    for (Eigen::Index i = 0; i < ch.hops[0].size(); ++i) {
      mean += ch.hops[0].data()[i];
      ++count;
    }
  }
  mean /= static_cast<double>(count);
  // 3-sigma bound on the magnitude of the sample mean of CN(0, amp^2).
  CHECK(std::abs(mean) < 3.0 * amp / std::sqrt(static_cast<double>(count)));
}

TEST_CASE("unit Rician factor keeps the per-entry power at the path loss") {
  ScenarioConfig cfg = default_scenario();
  cfg.rician_factor_h = 1.0;
  const auto dists = segment_distances(cfg);
  const double expected = std::pow(path_loss_amplitude(dists[0][1], cfg), 2);
  double power = 0;
  int count = 0;
  for (int seed = 0; seed < 30; ++seed) {
    const ChannelSet ch = sample_channels(cfg, 500 + seed);
    for (Eigen::Index i = 0; i < ch.hops[0].size(); ++i) {
      power += std::norm(ch.hops[0].data()[i]);
      ++count;
    }
  }
  REQUIRE(count >= 100000);
  CHECK(power / count == doctest::Approx(expected).epsilon(0.02));
}

TEST_CASE("rate formula") {
  const ScenarioConfig cfg = default_scenario();
  SUBCASE("zero gain gives zero rate") {
    CHECK(rate_bps(cplx(0, 0), cfg, 0) == 0.0);
  }
  SUBCASE("snr of one gives one bit per hertz") {
    const double gain2 = cfg.noise_power_w / cfg.tx_power_w[0];
    CHECK(rate_bps(std::sqrt(gain2), cfg, 0) == doctest::Approx(240e6));
  }
  SUBCASE("snr of three gives two bits per hertz") {
    const double gain2 = 3.0 * cfg.noise_power_w / cfg.tx_power_w[0];
    CHECK(rate_bps(std::sqrt(gain2), cfg, 0) == doctest::Approx(2.0 * 240e6));
  }
  SUBCASE("monotone in gain, power, and noise") {
    ScenarioConfig noisy = cfg;
    noisy.noise_power_w *= 2;
    CHECK(rate_bps(cplx(1e-6, 0), cfg, 0) > rate_bps(cplx(0.5e-6, 0), cfg, 0));
    CHECK(rate_bps(cplx(1e-6, 0), cfg, 0) > rate_bps(cplx(1e-6, 0), noisy, 0));
  }
}

TEST_CASE("transmit delay") {
  CHECK(transmit_delay_s(2.3e6 * 8, 240e6) == doctest::Approx(18.4 / 240.0));
  CHECK(transmit_delay_s(0.0, 240e6) == 0.0);
  CHECK(std::isinf(transmit_delay_s(100.0, 0.0)));
}

TEST_CASE("phase plan validation") {
  const ScenarioConfig cfg = default_scenario();
  PhasePlan plan = zero_plan(cfg);
  CHECK_NOTHROW(plan.validate_against(cfg));
  plan.thetas[0][0] = 2.0 * M_PI;  // out of the half-open range
  CHECK_THROWS_AS(plan.validate_against(cfg), ValidationError);
  plan = random_plan(cfg, 1);
  CHECK_NOTHROW(plan.validate_against(cfg));
  plan.thetas.pop_back();
  CHECK_THROWS_AS(plan.validate_against(cfg), ValidationError);
}

TEST_CASE("channel set file round trip, both layouts") {
  const ScenarioConfig cfg = default_scenario();
  const ChannelSet ch = sample_channels(cfg, 77);
  for (const char* name : {"rismp_ch.bin", "rismp_ch.json"}) {
    const std::string path =
        (std::filesystem::temp_directory_path() / name).string();
    write_channelset(ch, path);
    const ChannelSet back = read_channelset(path);
    CHECK(back.seed == ch.seed);
    REQUIRE(back.g.size() == ch.g.size());
    REQUIRE(back.hops.size() == ch.hops.size());
    for (std::size_t m = 0; m < ch.g.size(); ++m) CHECK(back.g[m] == ch.g[m]);
    for (std::size_t h = 0; h < ch.hops.size(); ++h)
      CHECK(back.hops[h] == ch.hops[h]);
    std::remove(path.c_str());
  }
}
