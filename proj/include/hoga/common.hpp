// Shared error types and deterministic random primitives.
//
// All randomized components in this library draw from std::mt19937_64 through
// the helpers below instead of std::uniform_*_distribution, whose output is
// implementation-defined. This keeps sample sets, splits and initializations
// bit-reproducible across standard libraries.

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>

namespace hoga {

struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite value produced by a tensor op or model step.
struct numeric_error : error {
  using error::error;
};

// Unreadable or inconsistent dataset directory.
struct dataset_error : error {
  using error::error;
};

// Invalid configuration (bad flag combination, out-of-range parameter).
struct config_error : error {
  using error::error;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Order-sensitive combine for deriving stream seeds (run seed x epoch, etc).
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ (splitmix64(b) + 0x9e3779b97f4a7c15ULL));
}

// Uniform integer in [0, n) via Lemire's multiply-shift rejection.
inline std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t n) {
  if (n == 0) throw error("uniform_index: empty range");
  while (true) {
    std::uint64_t x = rng();
    __uint128_t m = static_cast<__uint128_t>(x) * n;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo >= n) return static_cast<std::uint64_t>(m >> 64);
    std::uint64_t threshold = (0 - n) % n;
    if (lo >= threshold) return static_cast<std::uint64_t>(m >> 64);
  }
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform_real01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Index drawn with probability weights[i] / sum(weights); uniform fallback
// when the total mass is zero (all-equal-features degenerate case).
inline std::size_t weighted_choice(std::mt19937_64& rng,
                                   std::span<const double> weights) {
  if (weights.empty()) throw error("weighted_choice: empty weights");
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) return uniform_index(rng, weights.size());
  double r = uniform_real01(rng) * total;
  double cum = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    cum += weights[i];
    if (r < cum) return i;
  }
  return weights.size() - 1;
}

}  // namespace hoga
