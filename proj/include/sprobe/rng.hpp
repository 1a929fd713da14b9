#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace sprobe::rng {

// SplitMix64 output finalizer (Steele, Lea, Flood 2014).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// Counter-based generator: draw n of stream s under seed k is
//   mix64(mix64(key(k, s) + (n + 1) * golden))
// with key(k, s) = mix64(k ^ mix64(s + golden)). Every draw is a pure
// function of (seed, stream, counter), so results do not depend on
// evaluation order or thread schedule.
class CounterRng {
 public:
  constexpr CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept
      : key_(mix64(seed ^ mix64(stream + kGolden))) {}

  constexpr std::uint64_t bits(std::uint64_t counter) const noexcept {
    return mix64(mix64(key_ + (counter + 1) * kGolden));
  }

  // Uniform on [0,1) with 53 bits of resolution.
  constexpr double uniform(std::uint64_t counter) const noexcept {
    return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
  }

  // Uniform on (0,1].
  constexpr double uniform_open0(std::uint64_t counter) const noexcept {
    return static_cast<double>((bits(counter) >> 11) + 1) * 0x1.0p-53;
  }

  double uniform(std::uint64_t counter, double lo, double hi) const noexcept {
    return lo + (hi - lo) * uniform(counter);
  }

  // Integer uniform on [lo, hi] inclusive.
  std::int64_t uniform_int(std::uint64_t counter, std::int64_t lo, std::int64_t hi) const noexcept {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(uniform(counter) * static_cast<double>(span));
  }

  // Standard normal via Box-Muller on draws (2n, 2n+1), cosine branch.
  double normal(std::uint64_t counter) const noexcept {
    const double u1 = uniform_open0(2 * counter);
    const double u2 = uniform(2 * counter + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  // Poisson by CDF inversion of a single uniform. Intended for the moderate
  // rates used by shot noise (lambda up to a few hundred).
  std::int64_t poisson(std::uint64_t counter, double lambda) const noexcept {
    if (lambda <= 0.0) return 0;
    const double u = uniform(counter);
    double p = std::exp(-lambda);
    double cdf = p;
    std::int64_t k = 0;
    while (u >= cdf && p > 0.0) {
      ++k;
      p *= lambda / static_cast<double>(k);
      cdf += p;
    }
    if (p == 0.0) {
      // Underflowed tail: fall back to the normal approximation.
      return static_cast<std::int64_t>(std::max(0.0, std::round(lambda + std::sqrt(lambda) * normal(counter))));
    }
    return k;
  }

 private:
  std::uint64_t key_;
};

}  // namespace sprobe::rng
