#pragma once
// Deterministic seeded randomness. A master seed fans out into labeled
// substreams so that toggling one component (data, committees, attacks,
// training) does not perturb the draws of another.

#include <cstdint>
#include <random>
#include <string_view>

namespace fedval {

inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline uint64_t fnv1a(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

// Child seed for (seed, label). Distinct labels give unrelated streams.
inline uint64_t substream(uint64_t seed, std::string_view label) {
  uint64_t s = seed ^ fnv1a(label);
  splitmix64(s);
  return splitmix64(s);
}

inline std::mt19937_64 make_rng(uint64_t seed, std::string_view label) {
  return std::mt19937_64(substream(seed, label));
}

}  // namespace fedval
