#pragma once

#include <array>
#include <cstdint>

namespace surf {

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t splitmix64_mix(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

/// Seed of replication `r` (0-based) of an experiment with base seed `base`.
/// Equals the (r+1)-th output of a SplitMix64 stream started at `base`, so
/// distinct replications always receive distinct seeds.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t r) noexcept {
  return splitmix64_mix(base + (r + 1) * kGoldenGamma);
}

/// xoshiro256** seeded from a single 64-bit word through SplitMix64.
///
/// The byte-level definition lives in docs/rng.md; any change here breaks
/// replay of recorded experiments.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit constexpr Rng(std::uint64_t seed) noexcept : s_{} {
    std::uint64_t x = seed;
    for (auto& w : s_) {
      x += kGoldenGamma;
      w = splitmix64_mix(x);
    }
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }

  constexpr result_type operator()() noexcept { return next(); }

  constexpr std::uint64_t next() noexcept {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform on (0, 1] with 53 random bits; never returns 0.
  constexpr double uniform_pos() noexcept {
    return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
  }

  constexpr const std::array<std::uint64_t, 4>& state() const noexcept { return s_; }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> s_;
};

}  // namespace surf
