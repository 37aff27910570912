#pragma once

// Counter-based random streams. Every draw is a pure function of
// (seed, site, counter), which is what makes coupled configurations and
// growing site windows exact: materializing a site later, or in a different
// order, cannot change its event sequence.

#include <cstdint>

namespace shocklab {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// SplitMix64 finalizer.
inline constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

// Key of the event stream attached to one lattice site.
inline constexpr std::uint64_t site_key(std::uint64_t seed, int site) noexcept {
  const auto s = static_cast<std::uint64_t>(static_cast<std::int64_t>(site));
  return mix64(mix64(seed ^ 0x632BE59BD9B4E019ULL) ^ s * kGolden);
}

// n-th draw of a keyed stream (SplitMix64 sequence with increment kGolden).
inline constexpr std::uint64_t stream_draw(std::uint64_t key, std::uint64_t n) noexcept {
  return mix64(key + n * kGolden);
}

// Seed of replica r derived from the master seed. Published so that runs can
// be reproduced replica by replica.
inline constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t replica) noexcept {
  return mix64(master ^ mix64(replica + kGolden));
}

// Uniform on the open interval (0, 1); never returns 0 or 1.
inline constexpr double to_unit(std::uint64_t h) noexcept {
  return (static_cast<double>(h >> 12) + 0.5) * 0x1.0p-52;
}

}  // namespace shocklab
