#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>

namespace dualcache {

// std::mt19937_64 output is fixed by the standard, but the library's
// distributions and std::shuffle are not. These helpers keep every seeded
// draw identical across standard library implementations.
using Rng = std::mt19937_64;

// Uniform integer in [0, n) by rejection sampling.
inline std::size_t uniformIndex(Rng& rng, std::size_t n) {
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  // 2^64 mod n values at the bottom would bias the modulo; skip them.
  const std::uint64_t threshold = (0 - bound) % bound;
  std::uint64_t x = rng();
  while (x < threshold) x = rng();
  return static_cast<std::size_t>(x % bound);
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniformUnit(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double standardNormal(Rng& rng) {
  double u1 = uniformUnit(rng);
  while (u1 <= 0.0) u1 = uniformUnit(rng);
  const double u2 = uniformUnit(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

template <typename T>
void shuffle(std::span<T> items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = uniformIndex(rng, i);
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace dualcache
