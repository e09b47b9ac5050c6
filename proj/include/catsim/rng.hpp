#pragma once

// Per-trajectory random streams.
//
// Stream i of a run is a std::mt19937_64 seeded with
//   splitmix64(splitmix64(master_seed) + (i + 1) * 0x9E3779B97F4A7C15)
// and uniforms are formed from the top 53 bits of each 64-bit draw. Both the
// engine and the conversion are fully specified, so the outcome sequence of a
// trajectory depends only on (master_seed, i), never on thread scheduling.

#include <cstdint>
#include <random>

namespace catsim {

/// One SplitMix64 output step (Steele, Lea, Flood 2014).
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t stream_seed(std::uint64_t master_seed, std::uint64_t index) {
  return splitmix64(splitmix64(master_seed) + (index + 1) * 0x9E3779B97F4A7C15ULL);
}

class RandomStream {
 public:
  RandomStream(std::uint64_t master_seed, std::uint64_t index)
      : engine_(stream_seed(master_seed, index)) {}

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace catsim
