// Experiment configuration: node geometry, radio parameters, optimization
// weights, and the per-car model catalogs. Configs are immutable after load
// and safe to share read-only across parallel workers.

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "rismp/errors.hpp"

namespace rismp {

struct CatalogEntry {
  int index = 0;          // 1-based, contiguous
  double size_bits = 0;   // storage size of the model
  double kd_flops = 0;    // integration cost when this model is the student
  std::string label;
};

struct ModelCatalog {
  std::vector<CatalogEntry> entries;

  int count() const { return static_cast<int>(entries.size()); }
  const CatalogEntry& at(int index_1based) const;
  double size_bits(int index_1based) const { return at(index_1based).size_bits; }
  double kd_flops(int index_1based) const { return at(index_1based).kd_flops; }

  // Indices must be contiguous 1..I and sizes strictly increasing in index.
  void validate(const std::string& who) const;

  bool operator==(const ModelCatalog&) const = default;
};

bool operator==(const CatalogEntry& a, const CatalogEntry& b);

struct ScenarioConfig {
  std::vector<Eigen::Vector3d> tx_positions;   // local cars, M >= 1
  Eigen::Vector3d rx_position = Eigen::Vector3d::Zero();
  std::vector<Eigen::Vector3d> ris_positions;  // ordered along the hop chain
  std::vector<int> elements_per_ris;

  double rician_factor_h = 1.0;  // RIS-to-RIS segments
  double rician_factor_g = 1.0;  // car-to-RIS segments
  std::vector<double> bandwidth_hz;  // per transmitter
  std::vector<double> tx_power_w;    // per transmitter
  double noise_power_w = 1.0;
  double path_loss_exponent = 2.0;
  double reference_loss_db = 30.0;  // power loss at 1 m
  double carrier_freq_hz = 28e9;

  std::vector<double> weights;  // M+2 objective weights
  double t_max_s = 1.0;
  double compute_freq_flops = 1e9;

  std::vector<ModelCatalog> car_catalogs;  // one per local car
  ModelCatalog receiver_catalog;

  std::uint64_t seed = 0;

  int num_cars() const { return static_cast<int>(tx_positions.size()); }
  int num_ris() const { return static_cast<int>(ris_positions.size()); }

  // Throws ValidationError naming the violated invariant.
  void validate() const;

  bool operator==(const ScenarioConfig&) const;
};

// File I/O. The schema is a single JSON document with a schema_version
// field; see README for the layout. Sizes are stored in bits; on input a
// size may also be written as a string with a unit suffix
// ("280KB", "2.3MB", "18.4Mb", ...).
ScenarioConfig load_scenario(const std::string& path);
void save_scenario(const ScenarioConfig& cfg, const std::string& path);
ScenarioConfig scenario_from_json_text(const std::string& text);
std::string scenario_to_json_text(const ScenarioConfig& cfg);

double parse_size_bits(const std::string& text);

// Per-transmitter hop-segment lengths: Tx->RIS1, RIS_i->RIS_{i+1}, RIS_N->Rx.
// Throws ValidationError on coincident positions.
std::vector<std::vector<double>> segment_distances(const ScenarioConfig& cfg);

// sqrt(PL(d)) with PL(d) = PL0 * d^-alpha, PL0 = 10^(-reference_loss_db/10).
double path_loss_amplitude(double distance_m, const ScenarioConfig& cfg);

// Bundled scenarios and sweep-axis variants.
ScenarioConfig default_scenario();            // 3 RIS, 64 elements each
ScenarioConfig short_single_ris_scenario();   // 1 RIS, short links

// Replace the RIS chain by n panels evenly spaced between the transmitter
// cluster and the receiver at the default panel height.
ScenarioConfig with_hop_count(const ScenarioConfig& base, int n_ris);
// Set every panel to n elements (n need not be square).
ScenarioConfig with_elements(const ScenarioConfig& base, int n_elements);
// Single-RIS layout with the panel on a circle of radius 30 m around the
// transmitter cluster, at the given azimuth from the forward axis.
ScenarioConfig with_azimuth(const ScenarioConfig& base, double azimuth_deg);
// Default 3-RIS layout with the middle panel raised by the given offset.
ScenarioConfig with_vertical_offset(const ScenarioConfig& base, double offset_m);

}  // namespace rismp
