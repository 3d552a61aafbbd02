#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace alplab {

using Rng = std::mt19937_64;

// Independent stream seed for a named consumer of a run's master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view stream) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : stream) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  std::uint64_t z = master + 0x9e3779b97f4a7c15ull * (h | 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

template <typename Int>
Int uniform_index(Rng& rng, Int n) {
  return std::uniform_int_distribution<Int>(0, n - 1)(rng);
}

}  // namespace alplab
