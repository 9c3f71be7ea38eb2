// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <compare>
#include <cstdint>
#include <random>

namespace evsim {

// Virtual clock instant. Events sharing `seconds` are ordered by `seq`.
struct SimTime {
  double seconds = 0.0;
  std::uint64_t seq = 0;

  constexpr auto operator<=>(const SimTime&) const = default;
};

constexpr SimTime at_seconds(double s) { return SimTime{s, 0}; }

using Rng = std::mt19937_64;

// Uniform draw in [0, 1) built from the top 53 bits, independent of the
// standard library's distribution implementation.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

// Uniform integer in [0, n) for n > 0.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

// splitmix64 finaliser; derives independent stream seeds from one scenario seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace evsim
