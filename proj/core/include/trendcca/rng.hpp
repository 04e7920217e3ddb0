// Deterministic substream seeding for parallel Monte Carlo.
//
// Every replication draws from an mt19937_64 engine whose seed is derived by
// hashing (base seed, stream id, substream id) through splitmix64.  Distinct
// ids give statistically independent streams, and results are reproducible
// for a fixed base seed regardless of thread count or execution order.
#pragma once

#include <cstdint>
#include <random>

namespace trendcca {

// splitmix64 step; the standard finalizer from Vigna's reference code.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b,
                                 std::uint64_t c = 0, std::uint64_t d = 0) {
  std::uint64_t h = splitmix64(a);
  h = splitmix64(h ^ b);
  h = splitmix64(h ^ c);
  h = splitmix64(h ^ d);
  return h;
}

inline std::mt19937_64 make_substream(std::uint64_t base_seed,
                                      std::uint64_t stream,
                                      std::uint64_t substream = 0) {
  return std::mt19937_64(mix_seed(base_seed, stream, substream));
}

}  // namespace trendcca
