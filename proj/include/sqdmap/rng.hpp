#pragma once

#include <cstdint>
#include <random>

namespace sqdmap {

/// Deterministic 64-bit random source used by every stochastic operation.
///
/// The engine is std::mt19937_64, but all value mappings are derived from the
/// raw 64-bit output stream (never std::*_distribution), so an identical seed
/// and call sequence produces bit-identical values on any platform.
class RngState {
 public:
  explicit RngState(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [0, 1), 53-bit resolution.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform double in [a, b). Degenerate ranges (a >= b) return a without
  /// consuming randomness.
  double uniform(double a, double b) {
    if (!(a < b)) return a;
    return a + uniform01() * (b - a);
  }

  /// Uniform double in the open interval (-bound, bound), strict on both
  /// ends. bound <= 0 returns 0 without consuming randomness.
  double uniform_open_sym(double bound) {
    if (!(bound > 0.0)) return 0.0;
    double u = uniform01();
    while (u == 0.0) u = uniform01();
    return (2.0 * u - 1.0) * bound;
  }

  /// Uniform integer in [0, n). n == 0 returns 0 without consuming
  /// randomness. Rejection sampling keeps the result unbiased.
  std::uint64_t uniform_below(std::uint64_t n) {
    if (n == 0) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return x % n;
  }

  /// True with probability p. p <= 0 and p >= 1 consume no randomness.
  bool bernoulli(double p) {
    if (p <= 0.0) return false;
    if (p >= 1.0) return true;
    return uniform01() < p;
  }

  /// Child generator with a seed derived from this stream; advancing the
  /// child never perturbs the parent beyond the single derivation draw.
  RngState split() { return RngState(next_u64() ^ 0x9E3779B97F4A7C15ull); }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace sqdmap
