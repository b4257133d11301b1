#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

#include "gffforge/errors.hpp"

namespace gffforge {

/// SplitMix64 finalizer: a bijective mix of 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Seed for item k of a batch started from `base`. Nested derivations do not
/// commute: derive_seed(derive_seed(s, a), k) != derive_seed(derive_seed(s, k), a).
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t k) {
  return mix64(base + 0x9E3779B97F4A7C15ULL * (k + 1));
}

/// SplitMix64: the state is a Weyl counter, each output a bijective mix of it.
/// The seed is mixed before use, so nearby seeds start far apart on the
/// counter cycle. Satisfies UniformRandomBitGenerator.
class Rng {
public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0) : state_(mix64(seed ^ 0x6A09E667F3BCC909ULL)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    return mix64(state_ += 0x9E3779B97F4A7C15ULL);
  }

  /// Uniform on the open interval (0, 1).
  double uniform() { return ((*this)() >> 11) * 0x1.0p-53 + 0x1.0p-54; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double t = 2.0 * std::numbers::pi * uniform();
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
  }

  double exponential() { return -std::log(uniform()); }

  /// Symmetric alpha-stable variate with unit scale (Chambers-Mallows-Stuck).
  double stable(double alpha) {
    const double v = std::numbers::pi * (uniform() - 0.5);
    const double w = exponential();
    if (alpha == 1.0)
      return std::tan(v);
    return std::sin(alpha * v) / std::pow(std::cos(v), 1.0 / alpha) *
           std::pow(std::cos(v - alpha * v) / w, (1.0 - alpha) / alpha);
  }

private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

inline void require_stable_index(double alpha) {
  if (!(alpha > 1.0) || !(alpha < 2.0))
    throw DomainError("stable index alpha must lie in (1, 2)");
}

} // namespace gffforge
