#pragma once

#include <cmath>
#include <cstdint>

namespace stabilab {

/// SplitMix64 finalizer: a bijective 64-bit mixer (Vigna / Steele et al.).
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Counter-based deterministic RNG: a SplitMix64 stream with Box-Muller
/// normal variates on top. No platform-dependent state; identical seeds
/// give bit-identical streams everywhere, which is what every dataset
/// generator and sampler in this library relies on.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    return mix64(state_);
  }

  /// Uniform in [0, 1) with 53-bit resolution.
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform in (0, 1]; usable as a log() argument.
  double next_unit_open() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  /// Uniform integer in [0, n), n >= 1 (Lemire multiply-shift).
  std::uint64_t next_below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  /// Standard normal via Box-Muller; variates come in pairs, the second
  /// is cached so consumption order stays deterministic.
  double next_normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    constexpr double kTwoPi = 6.283185307179586476925286766559;
    const double u1 = next_unit_open();
    const double u2 = next_unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(kTwoPi * u2);
    has_spare_ = true;
    return r * std::cos(kTwoPi * u2);
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Collision-resistant seed for one task of a (trial, replicate, index)
/// grid: chained SplitMix64 finalizers over the packed tuple. Changing any
/// single coordinate is guaranteed to change the output (each stage is a
/// bijection); joint changes collide only with ~2^-64 probability.
inline std::uint64_t derive_task_seed(std::uint64_t master_seed,
                                      std::int64_t trial, std::int64_t b,
                                      std::int64_t i) {
  std::uint64_t h = mix64(master_seed ^ 0xA3C59AC2F0125B6Dull);
  h = mix64(h ^ static_cast<std::uint64_t>(trial));
  h = mix64(h ^ static_cast<std::uint64_t>(b));
  h = mix64(h ^ static_cast<std::uint64_t>(i));
  return h;
}

}  // namespace stabilab
