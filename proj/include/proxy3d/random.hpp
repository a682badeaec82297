#pragma once

// Counter-based pseudo-random expansion. Every value is a pure function of
// its integer coordinates, so results do not depend on evaluation order or
// thread count.

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace proxy3d::rng {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Folds a sequence of counters into one 64-bit key.
constexpr std::uint64_t mix(std::initializer_list<std::uint64_t> parts) noexcept {
  std::uint64_t h = 0;
  for (std::uint64_t p : parts) h = splitmix64(h ^ p);
  return h;
}

/// Uniform in [0, 1) with 53 random bits.
constexpr double to_unit(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Uniform in [-1, 1).
constexpr double to_symmetric(std::uint64_t bits) noexcept {
  return 2.0 * to_unit(bits) - 1.0;
}

/// Standard normal via Box-Muller on two derived streams of `key`.
inline double gaussian(std::uint64_t key) noexcept {
  const double u1 = 1.0 - to_unit(splitmix64(key ^ 0x5851F42D4C957F2DULL));
  const double u2 = to_unit(splitmix64(key ^ 0x14057B7EF767814FULL));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// Sequential generator over the same mixing function.
class Stream {
 public:
  explicit constexpr Stream(std::uint64_t seed) noexcept : key_(seed) {}

  constexpr std::uint64_t next() noexcept { return splitmix64(key_ ^ counter_++ * 0xD1B54A32D192ED03ULL); }
  constexpr double uniform() noexcept { return to_unit(next()); }
  constexpr double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  double normal() noexcept { return gaussian(next()); }
  /// Uniform integer in [0, n).
  constexpr std::uint64_t below(std::uint64_t n) noexcept {
    return n == 0 ? 0 : static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace proxy3d::rng
