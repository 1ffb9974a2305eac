#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace taskvec {

// 64-bit FNV-1a. Used for tensor-name stream seeds and header fingerprints;
// a provenance check, not a security feature.
constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

// splitmix64: tiny, seedable, identical output on every platform.
struct SplitMix64 {
  std::uint64_t state = 0;

  constexpr std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  double next_unit() { return double(next() >> 11) * 0x1.0p-53; }  // [0, 1)

  double next_unit_open0() { return double((next() >> 11) + 1) * 0x1.0p-53; }  // (0, 1]
};

// Standard normals via Box-Muller on consecutive uniform pairs.
struct GaussianStream {
  SplitMix64 rng;
  bool has_spare = false;
  double spare = 0.0;

  double next() {
    if (has_spare) {
      has_spare = false;
      return spare;
    }
    const double two_pi = 6.283185307179586476925286766559;
    double u1 = rng.next_unit_open0();
    double u2 = rng.next_unit();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = two_pi * u2;
    spare = r * std::sin(a);
    has_spare = true;
    return r * std::cos(a);
  }
};

inline std::uint64_t tensor_stream_seed(std::uint64_t global_seed, std::string_view name) {
  return global_seed ^ fnv1a64(name);
}

}  // namespace taskvec
