#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace nscale {

// Philox4x32-10 counter-based generator (Salmon et al., Random123).
// A block is a pure function of (key, counter), so ensembles drawn with
// per-(path, step) counters are identical under any execution order.
struct Philox4x32 {
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  static std::array<std::uint32_t, 4> block(std::uint64_t key,
                                            std::array<std::uint32_t, 4> ctr) {
    std::uint32_t k0 = static_cast<std::uint32_t>(key);
    std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
      const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
      const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ k0, lo1, hi0 ^ ctr[3] ^ k1, lo0};
      k0 += kWeyl0;
      k1 += kWeyl1;
    }
    return ctr;
  }
};

// Uniform double in (0, 1) from 64 random bits.
inline double uniform_from_bits(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1p-53;
}

// Deterministic stream of standard normals addressed by (path, step, block).
// Each Philox block yields a Box-Muller pair.
class CountingNormals {
 public:
  explicit CountingNormals(std::uint64_t seed) : seed_(seed) {}

  std::array<double, 2> pair(std::uint64_t path, std::uint32_t step,
                             std::uint32_t block = 0) const {
    const auto r = Philox4x32::block(
        seed_, {static_cast<std::uint32_t>(path),
                static_cast<std::uint32_t>(path >> 32), step, block});
    const std::uint64_t b0 =
        (static_cast<std::uint64_t>(r[0]) << 32) | r[1];
    const std::uint64_t b1 =
        (static_cast<std::uint64_t>(r[2]) << 32) | r[3];
    const double u1 = uniform_from_bits(b0);
    const double u2 = uniform_from_bits(b1);
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 2.0 * M_PI * u2;
    return {rad * std::cos(ang), rad * std::sin(ang)};
  }

  // Fills out[0..n) with normals for one (path, step), n <= 6.
  void fill(std::uint64_t path, std::uint32_t step, int n, double* out) const {
    for (int b = 0; 2 * b < n; ++b) {
      const auto z = pair(path, step, static_cast<std::uint32_t>(b));
      out[2 * b] = z[0];
      if (2 * b + 1 < n) out[2 * b + 1] = z[1];
    }
  }

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
};

// Small deterministic helper for non-ensemble randomness (test directions,
// random trial coefficients). Same Philox core, sequential counter.
class SequenceRng {
 public:
  explicit SequenceRng(std::uint64_t seed) : seed_(seed) {}

  double uniform() {
    if (have_ % 2 == 0) {
      cache_ = Philox4x32::block(seed_, {ctr_++, 0xA5A5A5A5u, 0x5A5A5A5Au, 0u});
    }
    const int i = have_ % 2;
    ++have_;
    const std::uint64_t b =
        (static_cast<std::uint64_t>(cache_[2 * i]) << 32) | cache_[2 * i + 1];
    return uniform_from_bits(b);
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

 private:
  std::uint64_t seed_;
  std::uint32_t ctr_ = 0;
  int have_ = 0;
  std::array<std::uint32_t, 4> cache_{};
};

}  // namespace nscale
