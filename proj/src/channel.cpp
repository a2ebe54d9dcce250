#include "rismp/channel.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstring>
#include <fstream>

#include "rismp/rng.hpp"

namespace rismp {

using cplx = std::complex<double>;

void PhasePlan::validate_against(const ScenarioConfig& cfg) const {
  if (static_cast<int>(thetas.size()) != cfg.num_ris())
    throw ValidationError("phase plan must have one vector per RIS");
  for (int i = 0; i < cfg.num_ris(); ++i) {
    const Eigen::VectorXd& t = thetas[static_cast<std::size_t>(i)];
    if (t.size() != cfg.elements_per_ris[static_cast<std::size_t>(i)])
      throw ValidationError("phase vector length mismatch at RIS " +
                            std::to_string(i + 1));
    for (Eigen::Index j = 0; j < t.size(); ++j)
      if (!(t[j] >= 0.0 && t[j] < 2.0 * M_PI))
        throw ValidationError("phase shifts must lie in [0, 2*pi)");
  }
}

Eigen::VectorXcd panel_steering(int n_elements, const Eigen::Vector3d& toward,
                                double wavelength_m) {
  const int cols = static_cast<int>(std::ceil(std::sqrt(n_elements)));
  const double spacing = wavelength_m / 2.0;
  const double k = 2.0 * M_PI / wavelength_m;
  Eigen::VectorXcd a(n_elements);
  for (int e = 0; e < n_elements; ++e) {
    const int row = e / cols;
    const int col = e % cols;
    const double y = (col - (cols - 1) / 2.0) * spacing;
    const double z = (row - (cols - 1) / 2.0) * spacing;
    const double phase = k * (y * toward.y() + z * toward.z());
    a[e] = cplx(std::cos(phase), std::sin(phase));
  }
  return a;
}

namespace {

struct SegmentLos {
  Eigen::VectorXcd arrive;  // steering at the receiving panel (or scalar 1)
  Eigen::VectorXcd depart;  // steering at the transmitting panel (or scalar 1)
  double amplitude = 0;     // path-loss amplitude of the segment
  cplx carrier = {1.0, 0.0};  // e^{-j 2 pi d / lambda}
};

Eigen::VectorXcd scalar_one() {
  Eigen::VectorXcd v(1);
  v[0] = cplx(1.0, 0.0);
  return v;
}

SegmentLos make_segment(const ScenarioConfig& cfg, const Eigen::Vector3d& from,
                        const Eigen::Vector3d& to, int n_from, int n_to) {
  const double wavelength = 299792458.0 / cfg.carrier_freq_hz;
  const Eigen::Vector3d diff = to - from;
  const double d = diff.norm();
  if (!(d > 0)) throw ValidationError("coincident node positions (zero-length segment)");
  const Eigen::Vector3d dir = diff / d;

  SegmentLos seg;
  seg.depart = n_from > 0 ? panel_steering(n_from, dir, wavelength) : scalar_one();
  seg.arrive = n_to > 0 ? panel_steering(n_to, -dir, wavelength) : scalar_one();
  seg.amplitude = path_loss_amplitude(d, cfg);
  const double carrier_phase = -2.0 * M_PI * d / wavelength;
  seg.carrier = cplx(std::cos(carrier_phase), std::sin(carrier_phase));
  return seg;
}

// One matrix entry: Rician mix of the rank-one LoS term and a CN(0,1) draw
// addressed by (key, entry index).
inline cplx rician_entry(const SegmentLos& seg, double beta, std::uint64_t key,
                         Eigen::Index r, Eigen::Index c, Eigen::Index ncols) {
  const double los_w = std::sqrt(beta / (beta + 1.0));
  const double nlos_w = std::sqrt(1.0 / (beta + 1.0));
  const cplx los = seg.arrive[r] * seg.depart[c] * seg.carrier;
  const cplx nlos = complex_normal_at(
      key, static_cast<std::uint64_t>(r * ncols + c));
  return seg.amplitude * (los_w * los + nlos_w * nlos);
}

ChannelSet sample_impl(const ScenarioConfig& cfg, std::uint64_t seed,
                       bool parallel) {
  cfg.validate();
  const int m = cfg.num_cars();
  const int n = cfg.num_ris();

  ChannelSet ch;
  ch.seed = seed;
  ch.g.resize(static_cast<std::size_t>(m));
  ch.hops.resize(static_cast<std::size_t>(n));

  for (int car = 0; car < m; ++car) {
    const int n1 = cfg.elements_per_ris.front();
    const SegmentLos seg =
        make_segment(cfg, cfg.tx_positions[static_cast<std::size_t>(car)],
                     cfg.ris_positions.front(), 0, n1);
    const std::uint64_t key =
        stream_key(seed, kTagCarChannel, static_cast<std::uint64_t>(car));
    Eigen::VectorXcd& g = ch.g[static_cast<std::size_t>(car)];
    g.resize(n1);
    for (int e = 0; e < n1; ++e)
      g[e] = rician_entry(seg, cfg.rician_factor_g, key, e, 0, 1);
  }

  for (int hop = 0; hop < n; ++hop) {
    const int n_in = cfg.elements_per_ris[static_cast<std::size_t>(hop)];
    const bool last = hop + 1 == n;
    const int n_out = last ? 1 : cfg.elements_per_ris[static_cast<std::size_t>(hop) + 1];
    const Eigen::Vector3d& from = cfg.ris_positions[static_cast<std::size_t>(hop)];
    const Eigen::Vector3d to =
        last ? cfg.rx_position : cfg.ris_positions[static_cast<std::size_t>(hop) + 1];
    const SegmentLos seg = make_segment(cfg, from, to, n_in, last ? 0 : n_out);
    const std::uint64_t key =
        stream_key(seed, kTagHopChannel, static_cast<std::uint64_t>(hop));

    Eigen::MatrixXcd& h = ch.hops[static_cast<std::size_t>(hop)];
    h.resize(n_out, n_in);
    const Eigen::Index total = static_cast<Eigen::Index>(n_out) * n_in;
#ifdef _OPENMP
#pragma omp parallel for if (parallel && total >= 1024) schedule(static)
#endif
    for (Eigen::Index idx = 0; idx < total; ++idx) {
      const Eigen::Index r = idx / n_in;
      const Eigen::Index c = idx % n_in;
      h(r, c) = rician_entry(seg, cfg.rician_factor_h, key, r, c, n_in);
    }
  }
  return ch;
}

}  // namespace

ChannelSet sample_channels(const ScenarioConfig& cfg, std::uint64_t seed) {
  return sample_impl(cfg, seed, true);
}

ChannelSet sample_channels_serial(const ScenarioConfig& cfg, std::uint64_t seed) {
  return sample_impl(cfg, seed, false);
}

std::complex<double> cascade_gain(const ChannelSet& ch, const PhasePlan& plan,
                                  int car) {
  if (car < 0 || car >= ch.num_cars())
    throw ValidationError("transmitter index out of range");
  const int n = ch.num_hops();
  if (static_cast<int>(plan.thetas.size()) != n)
    throw ValidationError("phase plan / channel hop count mismatch");

  Eigen::VectorXcd x = ch.g[static_cast<std::size_t>(car)];
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd& theta = plan.thetas[static_cast<std::size_t>(i)];
    const Eigen::MatrixXcd& h = ch.hops[static_cast<std::size_t>(i)];
    if (theta.size() != x.size() || h.cols() != x.size())
      throw ValidationError("phase plan / channel shape mismatch at hop " +
                            std::to_string(i + 1));
    for (Eigen::Index e = 0; e < x.size(); ++e)
      x[e] *= cplx(std::cos(theta[e]), std::sin(theta[e]));
    x = h * x;
  }
  // Last hop has a single output row.
  return x[0];
}

double rate_bps(std::complex<double> gain, const ScenarioConfig& cfg, int car) {
  const double snr = std::norm(gain) *
                     cfg.tx_power_w[static_cast<std::size_t>(car)] /
                     cfg.noise_power_w;
  return cfg.bandwidth_hz[static_cast<std::size_t>(car)] * std::log2(1.0 + snr);
}

std::vector<double> rates_for_plan(const ChannelSet& ch, const PhasePlan& plan,
                                   const ScenarioConfig& cfg) {
  std::vector<double> rates(static_cast<std::size_t>(ch.num_cars()));
  for (int m = 0; m < ch.num_cars(); ++m)
    rates[static_cast<std::size_t>(m)] = rate_bps(cascade_gain(ch, plan, m), cfg, m);
  return rates;
}

double transmit_delay_s(double size_bits, double rate_bps) {
  if (size_bits < 0) throw ValidationError("size must be nonnegative");
  if (size_bits == 0) return 0.0;
  if (!(rate_bps > 0)) return std::numeric_limits<double>::infinity();
  return size_bits / rate_bps;
}

PhasePlan zero_plan(const ScenarioConfig& cfg) {
  PhasePlan p;
  for (int e : cfg.elements_per_ris)
    p.thetas.push_back(Eigen::VectorXd::Zero(e));
  return p;
}

PhasePlan random_plan(const ScenarioConfig& cfg, std::uint64_t seed) {
  PhasePlan p;
  for (std::size_t i = 0; i < cfg.elements_per_ris.size(); ++i) {
    RandomStream rs(stream_key(seed, kTagPlanInit, i));
    Eigen::VectorXd t(cfg.elements_per_ris[i]);
    for (Eigen::Index j = 0; j < t.size(); ++j)
      t[j] = rs.uniform(0.0, 2.0 * M_PI);
    p.thetas.push_back(std::move(t));
  }
  return p;
}

namespace {

constexpr char kBinMagic[8] = {'R', 'I', 'S', 'C', 'H', 'S', 'E', 'T'};

void write_complex_block(std::ofstream& out, const Eigen::MatrixXcd& m) {
  // Row-major, re/im interleaved float64.
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double re = m(r, c).real();
      const double im = m(r, c).imag();
      out.write(reinterpret_cast<const char*>(&re), sizeof(double));
      out.write(reinterpret_cast<const char*>(&im), sizeof(double));
    }
}

Eigen::MatrixXcd read_complex_block(std::ifstream& in, Eigen::Index rows,
                                    Eigen::Index cols) {
  Eigen::MatrixXcd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      double re = 0, im = 0;
      in.read(reinterpret_cast<char*>(&re), sizeof(double));
      in.read(reinterpret_cast<char*>(&im), sizeof(double));
      m(r, c) = cplx(re, im);
    }
  if (!in) throw ParseError("truncated channel-set binary payload");
  return m;
}

bool has_suffix(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

nlohmann::json complex_matrix_to_json(const Eigen::MatrixXcd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      row.push_back({m(r, c).real(), m(r, c).imag()});
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXcd complex_matrix_from_json(const nlohmann::json& j) {
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  if (rows == 0) throw ParseError("empty complex matrix");
  const Eigen::Index cols = static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXcd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      m(r, c) = cplx(j[r][c][0].get<double>(), j[r][c][1].get<double>());
  return m;
}

}  // namespace

void write_channelset(const ChannelSet& ch, const std::string& path) {
  if (has_suffix(path, ".json")) {
    nlohmann::json j;
    j["seed"] = ch.seed;
    j["g"] = nlohmann::json::array();
    for (const Eigen::VectorXcd& g : ch.g) j["g"].push_back(complex_matrix_to_json(g));
    j["hops"] = nlohmann::json::array();
    for (const Eigen::MatrixXcd& h : ch.hops) j["hops"].push_back(complex_matrix_to_json(h));
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write channel set: " + path);
    out << j.dump(2) << "\n";
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write channel set: " + path);
  out.write(kBinMagic, sizeof(kBinMagic));
  const std::uint32_t version = 1;
  const std::uint32_t m = static_cast<std::uint32_t>(ch.num_cars());
  const std::uint32_t n = static_cast<std::uint32_t>(ch.num_hops());
  const std::uint64_t seed = ch.seed;
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  out.write(reinterpret_cast<const char*>(&m), sizeof(m));
  out.write(reinterpret_cast<const char*>(&n), sizeof(n));
  out.write(reinterpret_cast<const char*>(&seed), sizeof(seed));
  for (const Eigen::VectorXcd& g : ch.g) {
    const std::uint32_t len = static_cast<std::uint32_t>(g.size());
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    write_complex_block(out, g);
  }
  for (const Eigen::MatrixXcd& h : ch.hops) {
    const std::uint32_t rows = static_cast<std::uint32_t>(h.rows());
    const std::uint32_t cols = static_cast<std::uint32_t>(h.cols());
    out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
    out.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
    write_complex_block(out, h);
  }
}

ChannelSet read_channelset(const std::string& path) {
  ChannelSet ch;
  if (has_suffix(path, ".json")) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open channel set: " + path);
    nlohmann::json j;
    try {
      in >> j;
      ch.seed = j.at("seed").get<std::uint64_t>();
      for (const nlohmann::json& jg : j.at("g"))
        ch.g.push_back(complex_matrix_from_json(jg).col(0));
      for (const nlohmann::json& jh : j.at("hops"))
        ch.hops.push_back(complex_matrix_from_json(jh));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("channel-set JSON error: ") + e.what());
    }
    return ch;
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open channel set: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kBinMagic, sizeof(magic)) != 0)
    throw ParseError("not a channel-set binary file: " + path);
  std::uint32_t version = 0, m = 0, n = 0;
  std::uint64_t seed = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  in.read(reinterpret_cast<char*>(&m), sizeof(m));
  in.read(reinterpret_cast<char*>(&n), sizeof(n));
  in.read(reinterpret_cast<char*>(&seed), sizeof(seed));
  if (!in || version != 1) throw ParseError("unsupported channel-set version");
  ch.seed = seed;
  for (std::uint32_t i = 0; i < m; ++i) {
    std::uint32_t len = 0;
    in.read(reinterpret_cast<char*>(&len), sizeof(len));
    if (!in) throw ParseError("truncated channel-set file");
    ch.g.push_back(read_complex_block(in, len, 1).col(0));
  }
  for (std::uint32_t i = 0; i < n; ++i) {
    std::uint32_t rows = 0, cols = 0;
    in.read(reinterpret_cast<char*>(&rows), sizeof(rows));
    in.read(reinterpret_cast<char*>(&cols), sizeof(cols));
    if (!in) throw ParseError("truncated channel-set file");
    ch.hops.push_back(read_complex_block(in, rows, cols));
  }
  return ch;
}

}  // namespace rismp
