#pragma once

#include <cmath>
#include <complex>
#include <cstdint>

#include "calamp/gauss.hpp"

namespace calamp {

// SplitMix64 with hash-derived substreams. Self-contained so that draws are
// bit-identical across platforms and standard-library versions; substreams
// keyed by (seed, stream id) make parallel sweep cells reproducible
// regardless of scheduling.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  Rng stream(std::uint64_t stream_id) const { return Rng(mix(state_, stream_id)); }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double next_double() { return (next_u64() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller; no rejection, so the draw count per call
  // is fixed and the sequence is reproducible.
  double next_gauss() {
    const double u1 = (next_u64() >> 11) * 0x1.0p-53 + 0x1.0p-54;  // (0, 1]
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
  }

  double next_gauss(double mean, double var) { return mean + std::sqrt(var) * next_gauss(); }

  // Circularly symmetric complex normal with E|x|^2 = var.
  std::complex<double> next_complex_gauss(double var) {
    const double s = std::sqrt(0.5 * var);
    const double re = next_gauss();
    const double im = next_gauss();
    return {s * re, s * im};
  }

 private:
  std::uint64_t state_;
};

}  // namespace calamp
