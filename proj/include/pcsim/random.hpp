#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>

namespace pcsim {

// SplitMix64 finalizer. Used only to derive seeds; the streams themselves
// are std::mt19937_64.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Hash of (master, bit sequence). The length is mixed in, so "0" and "00"
// never collide structurally.
inline std::uint64_t hash_bits(std::uint64_t master,
                               std::span<const std::uint8_t> bits) noexcept {
  std::uint64_t h = mix64(master ^ 0x243F6A8885A308D3ULL);
  h = mix64(h ^ static_cast<std::uint64_t>(bits.size()));
  std::uint64_t chunk = 0;
  std::size_t filled = 0;
  for (std::uint8_t b : bits) {
    chunk |= static_cast<std::uint64_t>(b & 1U) << filled;
    if (++filled == 64) {
      h = mix64(h ^ chunk);
      chunk = 0;
      filled = 0;
    }
  }
  if (filled != 0) h = mix64(h ^ chunk);
  return h;
}

/// Seedable random stream with keyed substreams.
///
/// A substream is a pure function of (master seed, key); deriving it never
/// advances any other stream. Conversions from raw 64-bit words to doubles
/// and integers are spelled out here instead of going through the standard
/// distributions, whose outputs differ between standard libraries.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  explicit RandomStream(std::uint64_t seed) : engine_(mix64(seed)) {}

  static RandomStream keyed(std::uint64_t master,
                            std::span<const std::uint8_t> key) {
    return RandomStream(hash_bits(master, key));
  }
  static RandomStream keyed(std::uint64_t master, std::uint64_t index) {
    return RandomStream(mix64(mix64(master ^ 0x13198A2E03707344ULL) ^ index));
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }
  result_type operator()() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // One uniform draw, always, even for p in {0, 1}.
  bool bernoulli(double p) { return uniform() < p; }

  // Uniform on {0, ..., bound - 1}; bound > 0.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = max() - max() % bound;
    std::uint64_t v;
    do {
      v = engine_();
    } while (v >= limit);
    return v % bound;
  }

  // Inversion for small means, PTRS (Hormann 1993) above.
  std::uint64_t poisson(double lambda) {
    if (!(lambda > 0.0)) return 0;
    if (lambda < 30.0) return poisson_inversion(lambda);
    return poisson_ptrs(lambda);
  }

 private:
  std::uint64_t poisson_inversion(double lambda) {
    std::uint64_t k = 0;
    double p = std::exp(-lambda);
    double cdf = p;
    const double u = uniform();
    while (u > cdf && p > 0.0) {
      ++k;
      p *= lambda / static_cast<double>(k);
      cdf += p;
    }
    return k;
  }

  std::uint64_t poisson_ptrs(double lambda) {
    const double slam = std::sqrt(lambda);
    const double loglam = std::log(lambda);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2.0);
    for (;;) {
      const double u = uniform() - 0.5;
      const double v = uniform();
      const double us = 0.5 - std::fabs(u);
      const double k = std::floor((2.0 * a / us + b) * u + lambda + 0.43);
      if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(k);
      if (k < 0.0 || (us < 0.013 && v > us)) continue;
      if (std::log(v) + std::log(invalpha) - std::log(a / (us * us) + b) <=
          -lambda + k * loglam - std::lgamma(k + 1.0)) {
        return static_cast<std::uint64_t>(k);
      }
    }
  }

  std::mt19937_64 engine_;
};

// Draws the next bit of a root-to-leaf walk whose one-edge probability is f.
// Deterministic edges (f of exactly 0 or 1) consume no randomness; every
// sampler that walks a tree goes through here so that walks over the same
// marginals stay in lockstep.
inline int descend_bit(double f, RandomStream& rng) {
  if (f <= 0.0) return 0;
  if (f >= 1.0) return 1;
  return rng.uniform() < f ? 1 : 0;
}

// Fair coin used by the zero-mass conditioning convention.
inline int fair_bit(RandomStream& rng) { return rng.uniform() < 0.5 ? 1 : 0; }

// ceil(x) that ignores floating-point noise just above an integer, so that
// e.g. 15 / (1/13)^2 rounds to 2535 rather than 2536.
inline std::uint64_t ceil_count(double x) {
  const double nearest = std::round(x);
  if (std::fabs(x - nearest) <= 1e-9 * std::fmax(1.0, std::fabs(x))) {
    return static_cast<std::uint64_t>(nearest);
  }
  return static_cast<std::uint64_t>(std::ceil(x));
}

}  // namespace pcsim
