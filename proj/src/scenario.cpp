#include "rismp/scenario.hpp"

#include <nlohmann/json.hpp>

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace rismp {

using nlohmann::json;

bool operator==(const CatalogEntry& a, const CatalogEntry& b) {
  return a.index == b.index && a.size_bits == b.size_bits &&
         a.kd_flops == b.kd_flops && a.label == b.label;
}

const CatalogEntry& ModelCatalog::at(int index_1based) const {
  if (index_1based < 1 || index_1based > count())
    throw ValidationError("catalog index " + std::to_string(index_1based) +
                          " out of range 1.." + std::to_string(count()));
  return entries[static_cast<std::size_t>(index_1based - 1)];
}

void ModelCatalog::validate(const std::string& who) const {
  if (entries.empty())
    throw ValidationError(who + ": catalog must have at least one entry");
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const CatalogEntry& e = entries[k];
    if (e.index != static_cast<int>(k) + 1)
      throw ValidationError(who + ": catalog indices must be contiguous 1..I");
    if (!(e.size_bits > 0))
      throw ValidationError(who + ": model sizes must be positive");
    if (e.kd_flops < 0)
      throw ValidationError(who + ": kd_flops must be nonnegative");
    if (k > 0 && !(e.size_bits > entries[k - 1].size_bits))
      throw ValidationError(who +
                            ": model sizes must be strictly increasing in index");
  }
}

bool ScenarioConfig::operator==(const ScenarioConfig& o) const {
  auto vec_eq = [](const std::vector<Eigen::Vector3d>& a,
                   const std::vector<Eigen::Vector3d>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (a[i] != b[i]) return false;
    return true;
  };
  return vec_eq(tx_positions, o.tx_positions) && rx_position == o.rx_position &&
         vec_eq(ris_positions, o.ris_positions) &&
         elements_per_ris == o.elements_per_ris &&
         rician_factor_h == o.rician_factor_h &&
         rician_factor_g == o.rician_factor_g &&
         bandwidth_hz == o.bandwidth_hz && tx_power_w == o.tx_power_w &&
         noise_power_w == o.noise_power_w &&
         path_loss_exponent == o.path_loss_exponent &&
         reference_loss_db == o.reference_loss_db &&
         carrier_freq_hz == o.carrier_freq_hz && weights == o.weights &&
         t_max_s == o.t_max_s && compute_freq_flops == o.compute_freq_flops &&
         car_catalogs == o.car_catalogs &&
         receiver_catalog == o.receiver_catalog && seed == o.seed;
}

void ScenarioConfig::validate() const {
  const int m = num_cars();
  const int n = num_ris();
  if (m < 1) throw ValidationError("at least one local car is required (M >= 1)");
  if (n < 1) throw ValidationError("at least one RIS is required (N >= 1)");
  if (static_cast<int>(elements_per_ris.size()) != n)
    throw ValidationError("elements_per_ris must have one entry per RIS");
  for (int e : elements_per_ris)
    if (e < 1) throw ValidationError("every RIS needs at least one element");
  if (rician_factor_h < 0 || rician_factor_g < 0)
    throw ValidationError("Rician factors must be nonnegative");
  if (static_cast<int>(bandwidth_hz.size()) != m)
    throw ValidationError("bandwidth_hz must have one entry per local car");
  if (static_cast<int>(tx_power_w.size()) != m)
    throw ValidationError("tx_power_w must have one entry per local car");
  for (double b : bandwidth_hz)
    if (!(b > 0)) throw ValidationError("bandwidths must be strictly positive");
  for (double p : tx_power_w)
    if (!(p > 0)) throw ValidationError("transmit powers must be strictly positive");
  if (!(noise_power_w > 0))
    throw ValidationError("noise power must be strictly positive");
  if (path_loss_exponent < 2.0)
    throw ValidationError("path_loss_exponent must be >= 2");
  if (!(carrier_freq_hz > 0))
    throw ValidationError("carrier frequency must be strictly positive");
  if (static_cast<int>(weights.size()) != m + 2)
    throw ValidationError("weights must have exactly M+2 entries, got " +
                          std::to_string(weights.size()));
  for (double w : weights)
    if (w < 0) throw ValidationError("objective weights must be nonnegative");
  if (!(t_max_s > 0)) throw ValidationError("t_max_s must be strictly positive");
  if (!(compute_freq_flops > 0))
    throw ValidationError("compute_freq_flops must be strictly positive");
  if (static_cast<int>(car_catalogs.size()) != m)
    throw ValidationError("one model catalog per local car is required");
  for (int i = 0; i < m; ++i)
    car_catalogs[static_cast<std::size_t>(i)].validate("car " + std::to_string(i + 1));
  receiver_catalog.validate("receiver");
}

double parse_size_bits(const std::string& text) {
  std::size_t pos = 0;
  double value = 0;
  try {
    value = std::stod(text, &pos);
  } catch (const std::exception&) {
    throw ParseError("cannot parse size '" + text + "'");
  }
  while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos])))
    ++pos;
  const std::string unit = text.substr(pos);
  double factor = 0;
  if (unit.empty() || unit == "b" || unit == "bit" || unit == "bits")
    factor = 1;
  else if (unit == "B" || unit == "bytes")
    factor = 8;
  else if (unit == "kb" || unit == "Kb")
    factor = 1e3;
  else if (unit == "Mb")
    factor = 1e6;
  else if (unit == "KB" || unit == "kB" || unit == "K")
    factor = 8e3;
  else if (unit == "MB" || unit == "M")
    factor = 8e6;
  else
    throw ParseError("unknown size unit '" + unit + "' in '" + text + "'");
  if (!(value > 0)) throw ParseError("size must be positive: '" + text + "'");
  return value * factor;
}

namespace {

constexpr int kSchemaVersion = 1;

Eigen::Vector3d vec3_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3)
    throw ParseError(std::string(what) + " must be an [x, y, z] array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json vec3_to_json(const Eigen::Vector3d& v) {
  return json::array({v.x(), v.y(), v.z()});
}

double size_bits_from_json(const json& j) {
  if (j.is_number()) {
    const double bits = j.get<double>();
    if (!(bits > 0)) throw ParseError("size_bits must be positive");
    return bits;
  }
  if (j.is_string()) return parse_size_bits(j.get<std::string>());
  throw ParseError("size must be a number of bits or a string with a unit");
}

ModelCatalog catalog_from_json(const json& j) {
  ModelCatalog cat;
  if (!j.is_object() || !j.contains("entries"))
    throw ParseError("catalog must be an object with an 'entries' array");
  for (const json& je : j.at("entries")) {
    CatalogEntry e;
    e.index = je.at("index").get<int>();
    e.size_bits = size_bits_from_json(je.at("size"));
    e.kd_flops = je.value("kd_flops", 0.0);
    e.label = je.value("label", std::string{});
    cat.entries.push_back(std::move(e));
  }
  return cat;
}

json catalog_to_json(const ModelCatalog& cat) {
  json entries = json::array();
  for (const CatalogEntry& e : cat.entries) {
    entries.push_back({{"index", e.index},
                       {"size", e.size_bits},
                       {"kd_flops", e.kd_flops},
                       {"label", e.label}});
  }
  return {{"entries", entries}};
}

// Accepts a scalar (broadcast over cars) or an array of length M.
std::vector<double> per_car_from_json(const json& j, int m, const char* what) {
  std::vector<double> out;
  if (j.is_number()) {
    out.assign(static_cast<std::size_t>(m), j.get<double>());
  } else if (j.is_array()) {
    out = j.get<std::vector<double>>();
  } else {
    throw ParseError(std::string(what) + " must be a number or an array");
  }
  return out;
}

}  // namespace

ScenarioConfig scenario_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
  try {
    const int version = j.at("schema_version").get<int>();
    if (version != kSchemaVersion)
      throw ParseError("unsupported schema_version " + std::to_string(version));

    ScenarioConfig cfg;
    const json& geo = j.at("geometry");
    for (const json& p : geo.at("tx_positions"))
      cfg.tx_positions.push_back(vec3_from_json(p, "tx position"));
    cfg.rx_position = vec3_from_json(geo.at("rx_position"), "rx_position");
    for (const json& p : geo.at("ris_positions"))
      cfg.ris_positions.push_back(vec3_from_json(p, "ris position"));
    cfg.elements_per_ris = geo.at("elements_per_ris").get<std::vector<int>>();

    const json& radio = j.at("radio");
    cfg.rician_factor_h = radio.at("rician_factor_h").get<double>();
    cfg.rician_factor_g = radio.at("rician_factor_g").get<double>();
    const int m = static_cast<int>(cfg.tx_positions.size());
    cfg.bandwidth_hz = per_car_from_json(radio.at("bandwidth_hz"), m, "bandwidth_hz");
    cfg.tx_power_w = per_car_from_json(radio.at("tx_power_w"), m, "tx_power_w");
    cfg.noise_power_w = radio.at("noise_power_w").get<double>();
    cfg.path_loss_exponent = radio.at("path_loss_exponent").get<double>();
    cfg.reference_loss_db = radio.at("reference_loss_db").get<double>();
    cfg.carrier_freq_hz = radio.value("carrier_freq_hz", 28e9);

    const json& opt = j.at("optimization");
    cfg.weights = opt.at("weights").get<std::vector<double>>();
    cfg.t_max_s = opt.at("t_max_s").get<double>();
    cfg.compute_freq_flops = opt.at("compute_freq_flops").get<double>();

    const json& cats = j.at("catalogs");
    for (const json& jc : cats.at("cars"))
      cfg.car_catalogs.push_back(catalog_from_json(jc));
    cfg.receiver_catalog = catalog_from_json(cats.at("receiver"));

    cfg.seed = j.value("seed", 0ull);
    cfg.validate();
    return cfg;
  } catch (const json::exception& e) {
    throw ParseError(std::string("scenario schema error: ") + e.what());
  }
}

std::string scenario_to_json_text(const ScenarioConfig& cfg) {
  json tx = json::array();
  for (const Eigen::Vector3d& p : cfg.tx_positions) tx.push_back(vec3_to_json(p));
  json ris = json::array();
  for (const Eigen::Vector3d& p : cfg.ris_positions) ris.push_back(vec3_to_json(p));
  json cars = json::array();
  for (const ModelCatalog& c : cfg.car_catalogs) cars.push_back(catalog_to_json(c));

  const json j = {
      {"schema_version", kSchemaVersion},
      {"seed", cfg.seed},
      {"geometry",
       {{"tx_positions", tx},
        {"rx_position", vec3_to_json(cfg.rx_position)},
        {"ris_positions", ris},
        {"elements_per_ris", cfg.elements_per_ris}}},
      {"radio",
       {{"rician_factor_h", cfg.rician_factor_h},
        {"rician_factor_g", cfg.rician_factor_g},
        {"bandwidth_hz", cfg.bandwidth_hz},
        {"tx_power_w", cfg.tx_power_w},
        {"noise_power_w", cfg.noise_power_w},
        {"path_loss_exponent", cfg.path_loss_exponent},
        {"reference_loss_db", cfg.reference_loss_db},
        {"carrier_freq_hz", cfg.carrier_freq_hz}}},
      {"optimization",
       {{"weights", cfg.weights},
        {"t_max_s", cfg.t_max_s},
        {"compute_freq_flops", cfg.compute_freq_flops}}},
      {"catalogs", {{"cars", cars}, {"receiver", catalog_to_json(cfg.receiver_catalog)}}},
  };
  return j.dump(2) + "\n";
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scenario file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return scenario_from_json_text(buf.str());
}

void save_scenario(const ScenarioConfig& cfg, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write scenario file: " + path);
  out << scenario_to_json_text(cfg);
}

std::vector<std::vector<double>> segment_distances(const ScenarioConfig& cfg) {
  cfg.validate();
  const int n = cfg.num_ris();
  std::vector<std::vector<double>> out;
  out.reserve(static_cast<std::size_t>(cfg.num_cars()));
  auto checked = [](const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
    const double d = (a - b).norm();
    if (!(d > 0)) throw ValidationError("coincident node positions (zero-length segment)");
    return d;
  };
  for (const Eigen::Vector3d& tx : cfg.tx_positions) {
    std::vector<double> seg;
    seg.reserve(static_cast<std::size_t>(n + 1));
    seg.push_back(checked(tx, cfg.ris_positions.front()));
    for (int i = 0; i + 1 < n; ++i)
      seg.push_back(checked(cfg.ris_positions[static_cast<std::size_t>(i)],
                            cfg.ris_positions[static_cast<std::size_t>(i) + 1]));
    seg.push_back(checked(cfg.ris_positions.back(), cfg.rx_position));
    out.push_back(std::move(seg));
  }
  return out;
}

double path_loss_amplitude(double distance_m, const ScenarioConfig& cfg) {
  if (!(distance_m > 0))
    throw ValidationError("path loss requires a strictly positive distance");
  const double ref_amp = std::pow(10.0, -cfg.reference_loss_db / 20.0);
  return ref_amp * std::pow(distance_m, -cfg.path_loss_exponent / 2.0);
}

namespace {

ModelCatalog standard_car_catalog() {
  ModelCatalog c;
  c.entries = {
      {1, 280e3 * 8, 8e9, "model-1"},
      {2, 2.3e6 * 8, 16e9, "model-2"},
      {3, 4.1e6 * 8, 28e9, "model-3"},
      {4, 6.2e6 * 8, 40e9, "pointnet"},
  };
  return c;
}

}  // namespace

ScenarioConfig default_scenario() {
  ScenarioConfig cfg;
  cfg.tx_positions = {{0.0, -3.0, 20.0}, {0.0, 3.0, 20.0}};
  cfg.rx_position = {60.0, 0.0, 20.0};
  cfg.ris_positions = {{15.0, 0.0, 30.0}, {30.0, 0.0, 50.0}, {45.0, 0.0, 30.0}};
  cfg.elements_per_ris = {64, 64, 64};
  cfg.rician_factor_h = 1.0;
  cfg.rician_factor_g = 1.0;
  cfg.bandwidth_hz = {240e6, 240e6};
  cfg.tx_power_w = {0.1995, 0.1995};   // 23 dBm
  cfg.noise_power_w = 3.98e-13;        // -94 dBm
  cfg.path_loss_exponent = 2.2;
  cfg.reference_loss_db = 30.0;
  cfg.carrier_freq_hz = 28e9;
  cfg.weights = {1.0, 1.0, 1.0, 1.0};
  cfg.t_max_s = 6.0;
  cfg.compute_freq_flops = 1e10;
  cfg.car_catalogs = {standard_car_catalog(), standard_car_catalog()};
  cfg.receiver_catalog = standard_car_catalog();
  cfg.seed = 1;
  return cfg;
}

ScenarioConfig short_single_ris_scenario() {
  ScenarioConfig cfg = default_scenario();
  cfg.tx_positions = {{0.0, -2.0, 20.0}, {0.0, 2.0, 20.0}};
  cfg.rx_position = {20.0, 0.0, 20.0};
  cfg.ris_positions = {{10.0, 0.0, 30.0}};
  cfg.elements_per_ris = {64};
  return cfg;
}

ScenarioConfig with_hop_count(const ScenarioConfig& base, int n_ris) {
  if (n_ris < 1) throw ValidationError("hop count must be >= 1");
  ScenarioConfig cfg = base;
  Eigen::Vector3d tx_center = Eigen::Vector3d::Zero();
  for (const Eigen::Vector3d& p : base.tx_positions) tx_center += p;
  tx_center /= static_cast<double>(base.tx_positions.size());
  const double panel_z = 30.0;
  cfg.ris_positions.clear();
  for (int i = 1; i <= n_ris; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(n_ris + 1);
    Eigen::Vector3d p = tx_center + t * (base.rx_position - tx_center);
    p.z() = panel_z;
    cfg.ris_positions.push_back(p);
  }
  const int elems = base.elements_per_ris.front();
  cfg.elements_per_ris.assign(static_cast<std::size_t>(n_ris), elems);
  return cfg;
}

ScenarioConfig with_elements(const ScenarioConfig& base, int n_elements) {
  if (n_elements < 1) throw ValidationError("element count must be >= 1");
  ScenarioConfig cfg = base;
  cfg.elements_per_ris.assign(cfg.elements_per_ris.size(), n_elements);
  return cfg;
}

ScenarioConfig with_azimuth(const ScenarioConfig& base, double azimuth_deg) {
  ScenarioConfig cfg = base;
  Eigen::Vector3d tx_center = Eigen::Vector3d::Zero();
  for (const Eigen::Vector3d& p : base.tx_positions) tx_center += p;
  tx_center /= static_cast<double>(base.tx_positions.size());

  Eigen::Vector3d fwd = base.rx_position - tx_center;
  fwd.z() = 0.0;
  if (fwd.norm() == 0.0) fwd = Eigen::Vector3d::UnitX();
  fwd.normalize();
  const Eigen::Vector3d left(-fwd.y(), fwd.x(), 0.0);

  const double radius_m = 30.0;
  const double az = azimuth_deg * M_PI / 180.0;
  Eigen::Vector3d p = tx_center + radius_m * (std::cos(az) * fwd + std::sin(az) * left);
  p.z() = 30.0;
  cfg.ris_positions = {p};
  cfg.elements_per_ris = {base.elements_per_ris.front()};
  return cfg;
}

ScenarioConfig with_vertical_offset(const ScenarioConfig& base, double offset_m) {
  ScenarioConfig cfg = base;
  if (cfg.num_ris() < 2)
    throw ValidationError("vertical-offset layout needs at least 2 RIS");
  const std::size_t mid = cfg.ris_positions.size() / 2;
  const double side_z = cfg.ris_positions.front().z();
  cfg.ris_positions[mid].z() = side_z + offset_m;
  return cfg;
}

}  // namespace rismp
