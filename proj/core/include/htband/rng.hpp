#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace htband {

/// SplitMix64 finalizer; a bijective mixer of 64-bit words.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Counter-based seed derivation: distinct (stream, index) pairs under one
/// root give independent generator seeds.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream,
                          std::uint64_t index = 0) noexcept;

/// Seeded 64-bit generator. The real-valued conversions below are bit-exact
/// across standard libraries, unlike std::uniform_real_distribution.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  /// Uniform on (0, 1].
  double uniform_open() { return to_open_unit(engine_()); }
  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Fair ±1.
  int sign() { return (engine_() >> 63) ? 1 : -1; }

  /// Top 53 bits mapped to (0, 1]; bit 0 is left free for a sign.
  static double to_open_unit(std::uint64_t bits) {
    return static_cast<double>((bits >> 11) + 1) * 0x1.0p-53;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace htband
