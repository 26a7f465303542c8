#pragma once

#include <cstdint>
#include <random>

namespace cics {

/// SplitMix64 mixing step; derives independent stream seeds from a base seed
/// and a stream index so results do not depend on evaluation order.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  return Rng(mix_seed(seed, stream));
}

/// Uniform double in [0, 1) built from the top 53 bits; std::uniform_real_distribution
/// is not bit-reproducible across standard library implementations.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double standard_normal(Rng& rng);

/// Radical inverse of `index` in the given prime base (Halton coordinate).
double radical_inverse(std::uint64_t index, int base);
int nth_prime(int n);

}  // namespace cics
