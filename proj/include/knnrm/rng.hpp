#pragma once

#include <cstdint>
#include <random>

namespace knnrm {

using Rng = std::mt19937_64;

/// Generator for substream `stream` of experiment `seed`. Distinct
/// (seed, stream) pairs give independently seeded engines.
inline Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

/// Uniform on [lo, hi). Written out rather than using
/// std::uniform_real_distribution so streams are identical across standard
/// libraries.
inline double uniform(Rng& rng, double lo, double hi) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

}  // namespace knnrm
