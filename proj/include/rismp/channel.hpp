// Rician channel realizations for every hop segment, plus evaluation of the
// cascaded end-to-end gain and transmission rate under a phase plan.

#pragma once

#include <Eigen/Core>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "rismp/scenario.hpp"

namespace rismp {

// Per-RIS phase-shift vectors, theta in [0, 2*pi).
struct PhasePlan {
  std::vector<Eigen::VectorXd> thetas;

  void validate_against(const ScenarioConfig& cfg) const;
};

// One sampled realization of all link matrices. g[m] is the car->RIS1 vector
// for transmitter m; hops[i] maps RIS i+1 arrivals (N_{i+1} x N_i), with the
// last hop a 1 x N_N row into the single receive antenna.
struct ChannelSet {
  std::vector<Eigen::VectorXcd> g;
  std::vector<Eigen::MatrixXcd> hops;
  std::uint64_t seed = 0;

  int num_cars() const { return static_cast<int>(g.size()); }
  int num_hops() const { return static_cast<int>(hops.size()); }
};

// Each matrix is sqrt(beta/(beta+1))*LoS + sqrt(1/(beta+1))*NLoS, scaled by
// the segment's path-loss amplitude. The LoS part is a unit-modulus steering
// outer product from geometry; NLoS entries are i.i.d. CN(0,1). Entries are
// addressed by a counter-based RNG, so the result depends only on (cfg, seed).
ChannelSet sample_channels(const ScenarioConfig& cfg, std::uint64_t seed);
// Single-threaded reference with the identical entry addressing.
ChannelSet sample_channels_serial(const ScenarioConfig& cfg, std::uint64_t seed);

// (prod_i Theta_i H_i) g_m evaluated right-to-left through the chain.
std::complex<double> cascade_gain(const ChannelSet& ch, const PhasePlan& plan,
                                  int car);

// R_m = B_m log2(1 + |gain|^2 P_m / sigma^2).
double rate_bps(std::complex<double> gain, const ScenarioConfig& cfg, int car);

std::vector<double> rates_for_plan(const ChannelSet& ch, const PhasePlan& plan,
                                   const ScenarioConfig& cfg);

// S/R seconds; rate 0 yields +infinity (infeasible sentinel, never a crash).
double transmit_delay_s(double size_bits, double rate_bps);

PhasePlan zero_plan(const ScenarioConfig& cfg);
PhasePlan random_plan(const ScenarioConfig& cfg, std::uint64_t seed);

// Steering vector for a square-grid panel with half-wavelength spacing lying
// in the y-z plane; `toward` is the unit direction from the panel center to
// the far node. Exposed for the LoS construction and its tests.
Eigen::VectorXcd panel_steering(int n_elements, const Eigen::Vector3d& toward,
                                double wavelength_m);

// Regression-fixture I/O. JSON holds arrays of [re, im] pairs; the binary
// layout is documented in the README (row-major, re/im interleaved float64).
void write_channelset(const ChannelSet& ch, const std::string& path);
ChannelSet read_channelset(const std::string& path);

}  // namespace rismp
