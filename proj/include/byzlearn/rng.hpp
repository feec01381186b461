#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace byzlearn {

// mt19937_64 output is fixed by the standard; distributions are not, so all
// draws go through the helpers below.
using Rng = std::mt19937_64;

enum class StreamPurpose : std::uint64_t {
  signal = 1,
  adversary = 2,
  faulty_selection = 3,
  initial_value = 4,
  sampling = 5,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of the substream for (seed, agent, round, purpose).
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t agent, std::uint64_t round,
                                    StreamPurpose purpose) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ agent);
  h = splitmix64(h ^ round);
  h = splitmix64(h ^ static_cast<std::uint64_t>(purpose));
  return h;
}

inline Rng make_substream(std::uint64_t seed, std::uint64_t agent, std::uint64_t round,
                          StreamPurpose purpose) {
  return Rng{substream_seed(seed, agent, round, purpose)};
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_real(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

/// Uniform integer in [0, bound) by rejection (bound > 0).
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x = rng();
  while (x >= limit) x = rng();
  return x % bound;
}

}  // namespace byzlearn
