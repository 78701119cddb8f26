#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace quadplan {

/// Deterministic random source. All scenario randomness flows from a single
/// seed; derived streams are forked explicitly so that reordering one
/// consumer never perturbs another. Distributions are implemented here
/// rather than with std::*_distribution so sequences are identical across
/// standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) {
    const double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    return lo + u * (hi - lo);
  }

  /// Gaussian via Box-Muller; draws exactly two words per call.
  double gaussian(double mean, double stddev) {
    double u1 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    const double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    if (u1 < 1e-300) u1 = 1e-300;
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(6.283185307179586476925286766559 * u2);
  }

  /// Independent child stream; deterministic in (parent state, stream id).
  Rng fork(std::uint64_t stream) {
    std::uint64_t x = next_u64() ^ (0x9E3779B97F4A7C15ull * (stream + 1));
    // splitmix64 finalizer
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    x = x ^ (x >> 31);
    return Rng(x);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace quadplan
