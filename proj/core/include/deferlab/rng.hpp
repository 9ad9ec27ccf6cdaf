#pragma once

#include <cstdint>

namespace deferlab {

// Counter-based random streams.
//
// Every draw is a pure function of (key, counter): the key is derived from a
// tuple of 64-bit words with the SplitMix64 finalizer, and the n-th output of
// a stream is mix64(key + (n + 1) * kGolden), i.e. SplitMix64 seeded at `key`.
// Streams are therefore order-independent and can be split freely by sample
// index or purpose.
//
//   kGolden = 0x9e3779b97f4a7c15  (2^64 / phi)
//   mix64(z): z ^= z >> 30; z *= 0xbf58476d1ce4e5b9;
//             z ^= z >> 27; z *= 0x94d049bb133111eb; z ^= z >> 31
inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;

constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Folds one more word into a stream key.
constexpr std::uint64_t derive_key(std::uint64_t key, std::uint64_t word) {
  return mix64(key + kGolden + mix64(word + 0x632be59bd9b4e019ull));
}

class CounterStream {
 public:
  constexpr explicit CounterStream(std::uint64_t key) : key_(key) {}

  template <typename... Words>
  static constexpr CounterStream keyed(std::uint64_t root, Words... words) {
    std::uint64_t k = mix64(root);
    ((k = derive_key(k, static_cast<std::uint64_t>(words))), ...);
    return CounterStream(k);
  }

  constexpr std::uint64_t key() const { return key_; }
  constexpr std::uint64_t counter() const { return counter_; }

  constexpr std::uint64_t next_u64() {
    ++counter_;
    return mix64(key_ + counter_ * kGolden);
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Uniform integer in [0, n), n >= 1. Lemire's multiply-shift (bias < n / 2^64).
  std::uint64_t below(std::uint64_t n);
  bool bernoulli(double p) { return uniform() < p; }
  // Standard normal by Box-Muller (cosine branch only, two uniforms per draw).
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace deferlab
