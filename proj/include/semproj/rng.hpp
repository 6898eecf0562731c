#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace semproj {

// Counter-based seeding: every (seed, index) pair gets its own generator, so
// parallel iterations produce the same stream regardless of scheduling.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

// FNV-1a, used to derive per-experiment seeds from string ids.
inline std::uint64_t hash_string(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t index) {
  return std::mt19937_64(mix_seed(seed, index));
}

}  // namespace semproj
