#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace dynunc::rng {

/// splitmix64; used for seeding and substream derivation.
class SplitMix64 {
public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

private:
  std::uint64_t state_;
};

/// xoshiro256** with splitmix64 seeding and Box-Muller normal deviates.
/// The algorithm is fixed here rather than delegated to <random> so that
/// seeded fixtures reproduce bit-identically across platforms and standard
/// library versions.
class Xoshiro256ss {
public:
  explicit Xoshiro256ss(std::uint64_t seed) {
    SplitMix64 sm(seed);
    for (auto& s : state_) s = sm.next();
  }

  /// Deterministic per-stream generator for draw-indexed substreams.
  static Xoshiro256ss substream(std::uint64_t seed, std::uint64_t stream) {
    SplitMix64 sm(seed);
    const std::uint64_t base = sm.next();
    SplitMix64 sm2(base + 0x9E3779B97F4A7C15ULL * (stream + 1));
    return Xoshiro256ss(sm2.next());
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform in (0, 1].
  double uniform01() { return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53; }

  /// Standard normal via Box-Muller; the second deviate of each pair is
  /// cached, so consumption order is fixed.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::uint64_t state_[4] = {};
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace dynunc::rng
