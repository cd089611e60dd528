#pragma once

// Counter-based uniform draws: a pure function of (seed, stream, counter), so
// trials can run in any order or concurrently with identical results.

#include <cstdint>

namespace retrosim {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Substream key for one trial of a run.
constexpr std::uint64_t substream_key(std::uint64_t master_seed, std::uint64_t stream) {
  return mix64(mix64(master_seed + 0x9E3779B97F4A7C15ULL) ^ mix64(stream + 0xD1B54A32D192ED03ULL));
}

/// Uniform double in [0, 1) with 53 random bits.
constexpr double uniform_draw(std::uint64_t master_seed, std::uint64_t stream, std::uint64_t counter) {
  const std::uint64_t bits = mix64(substream_key(master_seed, stream) + 0x9E3779B97F4A7C15ULL * (counter + 1));
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace retrosim
