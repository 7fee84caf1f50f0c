#pragma once

#include <cstdint>
#include <random>

namespace ellreg {

/// SplitMix64 mixing step; used to derive independent child seeds from a
/// master seed so parallel replications get disjoint streams.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Child seed for stream `index` under master `seed`. Each replication draws
/// from its own generator, so results do not depend on how replications are
/// sharded across threads.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(seed ^ splitmix64(index + 0x51ED27E3581FD5C5ull));
}

using Rng = std::mt19937_64;

}  // namespace ellreg
