#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace subgp {

using Rng = std::mt19937_64;

/// Per-member stream seed. Member i's stream depends only on (base, i), so
/// results do not depend on how members are scheduled across threads.
inline std::uint64_t member_seed(std::uint64_t base_seed, std::uint64_t member_index) {
  return base_seed ^ member_index;
}

/// Sub-seed for a retry after a failed member fit.
inline std::uint64_t retry_seed(std::uint64_t seed) { return seed ^ 0x9E3779B97F4A7C15ULL; }

/// Uniform double in [0, 1) from the top 53 bits. Written out instead of
/// std::uniform_real_distribution so streams are identical across standard
/// library implementations.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Standard normal draw (Box-Muller, one output per call).
inline double standard_normal(Rng& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace subgp
