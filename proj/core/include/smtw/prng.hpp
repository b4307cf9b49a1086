#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace smtw {

// All randomness in the toolkit flows through named streams derived from a
// single master seed:
//
//   stream_seed = fnv1a64( le64(master_seed) || component_name || le64(index) )
//
// and each stream is a SplitMix64 generator over that seed. Both primitives
// are fully specified here, so independent reimplementations can reproduce
// every draw bit for bit. Distribution helpers below avoid the standard
// library's implementation-defined <random> distributions for the same
// reason.

constexpr uint64_t kFnvOffsetBasis = 1469598103934665603ull;
constexpr uint64_t kFnvPrime = 1099511628211ull;

constexpr uint64_t fnv1a64(const unsigned char* data, size_t len,
                           uint64_t h = kFnvOffsetBasis) {
  for (size_t i = 0; i < len; ++i) {
    h ^= data[i];
    h *= kFnvPrime;
  }
  return h;
}

inline uint64_t derive_stream(uint64_t master_seed, std::string_view component,
                              uint64_t index) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(master_seed >> (8 * i));
  uint64_t h = fnv1a64(buf, 8);
  h = fnv1a64(reinterpret_cast<const unsigned char*>(component.data()),
              component.size(), h);
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(index >> (8 * i));
  return fnv1a64(buf, 8, h);
}

class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  // SplitMix64 step (Steele, Lea, Flood 2014).
  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0,1) with 53 bits of mantissa.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Unbiased uniform in [0,n) via Lemire's multiply-rejection method.
  uint64_t uniform_index(uint64_t n) {
    uint64_t x = next_u64();
    __uint128_t m = static_cast<__uint128_t>(x) * n;
    auto lo = static_cast<uint64_t>(m);
    if (lo < n) {
      uint64_t threshold = (0 - n) % n;
      while (lo < threshold) {
        x = next_u64();
        m = static_cast<__uint128_t>(x) * n;
        lo = static_cast<uint64_t>(m);
      }
    }
    return static_cast<uint64_t>(m >> 64);
  }

  // Uniform in [-scale, scale).
  double uniform_symmetric(double scale) { return (2.0 * next_double() - 1.0) * scale; }

  // Fisher-Yates.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = uniform_index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  uint64_t state_;
};

}  // namespace smtw
