#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "fieldst/hash.hpp"

namespace fieldst {

// splitmix64 finalizer. Every seed derivation in the project funnels
// through this so that streams are stable across platforms and releases.
constexpr uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr uint64_t mix_seed(uint64_t seed, uint64_t tag) {
  return mix64(seed ^ mix64(tag));
}

constexpr uint64_t mix_seed(uint64_t seed, std::string_view tag) {
  return mix_seed(seed, fnv1a(tag));
}

constexpr uint64_t mix_seed(uint64_t seed, std::string_view tag, uint64_t index) {
  return mix_seed(mix_seed(seed, tag), index);
}

// Deterministic splitmix64 stream. We do not use <random> distributions:
// their output is implementation-defined, which would break the
// byte-identical reproducibility contract.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53-bit resolution.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Uniform in [0, bound) via the multiply-shift reduction (bound > 0).
  uint64_t bounded(uint64_t bound) {
    return static_cast<uint64_t>((static_cast<__uint128_t>(next_u64()) * bound) >> 64);
  }

  // Inclusive integer range.
  int uniform_int(int lo, int hi) {
    return lo + static_cast<int>(bounded(static_cast<uint64_t>(hi - lo) + 1));
  }

  // Fisher-Yates, fixed algorithm for reproducible shuffles.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(bounded(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  uint64_t state_;
};

}  // namespace fieldst
