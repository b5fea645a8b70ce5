#pragma once

#include <cstdint>
#include <random>

namespace spadsim::rng {

// Reproducibility contract: every random quantity is drawn from an
// std::mt19937_64 engine seeded through derive_seed(master, a, b, c), where
// (a, b, c) index the independent unit of work (grid point, trial, pixel).
// Identical (master, a, b, c) gives an identical stream on any platform.

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a = 0,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
  constexpr std::uint64_t golden = 0x9e3779b97f4a7c15ULL;
  std::uint64_t s = mix64(master ^ 0xd1b54a32d192ed03ULL);
  s = mix64(s + golden * (a + 1));
  s = mix64(s + golden * (b + 1));
  s = mix64(s + golden * (c + 1));
  return s;
}

inline std::mt19937_64 make_engine(std::uint64_t seed) {
  return std::mt19937_64(seed);
}

/// Uniform double in [0, 1), 53 payload bits, implementation-independent.
inline double uniform_double(std::mt19937_64& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [lo, hi] via rejection-free Lemire-style reduction kept
/// deliberately simple: modulo on a 64-bit draw (bias < 2^-40 for any range
/// used here).
inline std::int64_t uniform_int(std::mt19937_64& eng, std::int64_t lo,
                                std::int64_t hi) {
  const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<std::int64_t>(eng() % span);
}

}  // namespace spadsim::rng
