// Counter-based random number generation (Philox4x32-10).
//
// Every random quantity in the toolkit is addressed by (key, counter), where
// the key is derived from a user seed plus a purpose tag and the counter is a
// draw index. This makes parallel loops reproducible: a worker that owns item
// i draws from counter block i and gets the same bits regardless of thread
// count or scheduling.

#pragma once

#include <cmath>
#include <complex>
#include <cstdint>

namespace rismp {

namespace detail {

struct U32x4 {
  std::uint32_t v[4];
};

inline void philox_round(U32x4& ctr, std::uint32_t k0, std::uint32_t k1) {
  constexpr std::uint64_t kMul0 = 0xD2511F53ull;
  constexpr std::uint64_t kMul1 = 0xCD9E8D57ull;
  const std::uint64_t p0 = kMul0 * ctr.v[0];
  const std::uint64_t p1 = kMul1 * ctr.v[2];
  const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
  const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
  const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
  const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
  U32x4 out;
  out.v[0] = hi1 ^ ctr.v[1] ^ k0;
  out.v[1] = lo1;
  out.v[2] = hi0 ^ ctr.v[3] ^ k1;
  out.v[3] = lo0;
  ctr = out;
}

}  // namespace detail

// One 128-bit Philox4x32-10 block for a 64-bit key and 128-bit counter.
inline detail::U32x4 philox_block(std::uint64_t key, std::uint64_t ctr_lo,
                                  std::uint64_t ctr_hi) {
  detail::U32x4 ctr{{static_cast<std::uint32_t>(ctr_lo),
                     static_cast<std::uint32_t>(ctr_lo >> 32),
                     static_cast<std::uint32_t>(ctr_hi),
                     static_cast<std::uint32_t>(ctr_hi >> 32)}};
  std::uint32_t k0 = static_cast<std::uint32_t>(key);
  std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);
  for (int round = 0; round < 10; ++round) {
    detail::philox_round(ctr, k0, k1);
    k0 += 0x9E3779B9u;
    k1 += 0xBB67AE85u;
  }
  return ctr;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Derives an independent stream key from a seed and up to three purpose tags.
inline std::uint64_t stream_key(std::uint64_t seed, std::uint64_t t0,
                                std::uint64_t t1 = 0, std::uint64_t t2 = 0) {
  std::uint64_t k = splitmix64(seed);
  k = splitmix64(k ^ t0);
  k = splitmix64(k ^ t1);
  k = splitmix64(k ^ t2);
  return k;
}

// Purpose tags; keep values stable, they are part of the output format.
enum StreamTag : std::uint64_t {
  kTagHopChannel = 1,
  kTagCarChannel = 2,
  kTagPlanInit = 3,
  kTagRandomization = 4,
  kTagGa = 5,
  kTagRandomHop = 6,
  kTagDataset = 7,
  kTagTrain = 8,
  kTagSdpInit = 9,
};

inline double u64_to_unit(std::uint64_t bits) {
  // [0, 1) with 53 significant bits.
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Uniform pair in (0,1] x [0,1) from one block; the first coordinate is kept
// away from zero so it can feed a logarithm.
inline void uniform_pair_at(std::uint64_t key, std::uint64_t index,
                            std::uint64_t item, double& u1, double& u2) {
  const detail::U32x4 b = philox_block(key, index, item);
  const std::uint64_t w0 =
      (static_cast<std::uint64_t>(b.v[0]) << 32) | b.v[1];
  const std::uint64_t w1 =
      (static_cast<std::uint64_t>(b.v[2]) << 32) | b.v[3];
  u1 = static_cast<double>((w0 >> 11) + 1) * 0x1.0p-53;
  u2 = u64_to_unit(w1);
}

// Circularly symmetric complex normal, E|z|^2 = 1, addressed by draw index.
inline std::complex<double> complex_normal_at(std::uint64_t key,
                                              std::uint64_t index,
                                              std::uint64_t item = 0) {
  double u1 = 0.0, u2 = 0.0;
  uniform_pair_at(key, index, item, u1, u2);
  const double r = std::sqrt(-std::log(u1));
  const double phi = 2.0 * M_PI * u2;
  return {r * std::cos(phi), r * std::sin(phi)};
}

// Sequential convenience stream over the same generator.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t key, std::uint64_t item = 0)
      : key_(key), item_(item) {}

  std::uint64_t next_u64() {
    if (have_spare_u64_) {
      have_spare_u64_ = false;
      return spare_u64_;
    }
    const detail::U32x4 b = philox_block(key_, counter_++, item_);
    spare_u64_ = (static_cast<std::uint64_t>(b.v[2]) << 32) | b.v[3];
    have_spare_u64_ = true;
    return (static_cast<std::uint64_t>(b.v[0]) << 32) | b.v[1];
  }

  // [0, 1)
  double uniform() { return u64_to_unit(next_u64()); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Integer in [0, n), n > 0. Uses rejection to stay unbiased.
  std::uint64_t uniform_index(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return x % n;
  }

  double normal() {
    if (have_spare_normal_) {
      have_spare_normal_ = false;
      return spare_normal_;
    }
    const double u1 =
        static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = 2.0 * M_PI * u2;
    spare_normal_ = r * std::sin(phi);
    have_spare_normal_ = true;
    return r * std::cos(phi);
  }

  std::complex<double> complex_normal() {
    const double u1 =
        static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    const double u2 = uniform();
    const double r = std::sqrt(-std::log(u1));
    const double phi = 2.0 * M_PI * u2;
    return {r * std::cos(phi), r * std::sin(phi)};
  }

 private:
  std::uint64_t key_;
  std::uint64_t item_;
  std::uint64_t counter_ = 0;
  std::uint64_t spare_u64_ = 0;
  double spare_normal_ = 0.0;
  bool have_spare_u64_ = false;
  bool have_spare_normal_ = false;
};

}  // namespace rismp
