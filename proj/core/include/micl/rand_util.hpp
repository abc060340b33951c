#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace micl {

// splitmix64: used everywhere a sub-seed has to be derived from a master
// seed so that independent streams stay independent and reproducible.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(a) ^ (b + 0x9E3779B97F4A7C15ULL));
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return mix_seed(mix_seed(a, b), c);
}

// Uniform double in [0, 1) built from raw bits. std::uniform_real_distribution
// is implementation-defined, which would make seeded runs differ between
// standard libraries; this mapping is fixed.
inline double uniform01(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

inline std::uint64_t fnv1a64(const void* data, std::size_t len,
                             std::uint64_t h = 0xCBF29CE484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001B3ULL;
  }
  return h;
}

inline std::uint64_t fnv1a64(std::string_view s,
                             std::uint64_t h = 0xCBF29CE484222325ULL) {
  return fnv1a64(s.data(), s.size(), h);
}

// Order-sensitive hash of a list of strings, with separators so that
// {"ab","c"} and {"a","bc"} do not collide.
inline std::uint64_t fnv1a64_strings(const std::vector<std::string>& parts) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (const auto& s : parts) {
    h = fnv1a64(s, h);
    const unsigned char sep = 0x1F;
    h = fnv1a64(&sep, 1, h);
  }
  return h;
}

}  // namespace micl
