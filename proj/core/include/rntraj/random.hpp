#pragma once

#include <cstdint>
#include <random>

namespace rntraj {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent per-item seeds from a
/// master seed so that parallel work is reproducible regardless of order.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return mix_seed(mix_seed(master) ^ (stream + 0x632be59bd9b4e019ULL));
}

}  // namespace rntraj
