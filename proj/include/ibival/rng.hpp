#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace ibival {

/// Seeded random source with a pinned sample algorithm: mt19937_64 engine,
/// 53-bit uniforms, Box-Muller normals. std::*_distribution is avoided on
/// purpose — its output differs between standard libraries, and generated
/// series must be byte-reproducible everywhere.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  /// Uniform in [0, 1), 53-bit resolution.
  double uniform01() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  bool bernoulli(double p) { return uniform01() < p; }

  /// Standard normal via the trigonometric Box-Muller transform. One draw
  /// consumes exactly two engine outputs; no state is cached.
  double gauss() {
    double u1 = uniform01();
    while (u1 == 0.0) u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  double gauss(double mean, double stddev) { return mean + stddev * gauss(); }

private:
  std::mt19937_64 eng_;
};

}  // namespace ibival
