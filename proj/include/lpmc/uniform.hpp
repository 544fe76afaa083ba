// Counter-based uniform streams: u = f(seed, path_index, counter) with no
// hidden state, so any draw can be replayed and paths can run in parallel.

#pragma once

#include <cstdint>

namespace lpmc {

namespace detail {

// 64-bit finalizer (murmur3 variant); full avalanche.
inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 33;
  z *= 0xff51afd7ed558ccdULL;
  z ^= z >> 33;
  z *= 0xc4ceb9fe1a85ec53ULL;
  z ^= z >> 33;
  return z;
}

inline std::uint64_t stream_word(std::uint64_t seed, std::uint64_t path_index,
                                 std::uint64_t counter) {
  std::uint64_t key = mix64(seed + 0x9e3779b97f4a7c15ULL);
  key = mix64(key ^ mix64(path_index + 0xbf58476d1ce4e5b9ULL));
  return mix64(mix64(key + counter * 0x94d049bb133111ebULL));
}

}  // namespace detail

class UniformStream {
 public:
  UniformStream(std::uint64_t seed, std::uint64_t path_index,
                std::uint64_t counter = 0)
      : seed_(seed), path_index_(path_index), counter_(counter) {}

  // Strictly inside (0, 1): the 53-bit draw is offset by half a grid step.
  double next() {
    std::uint64_t w = detail::stream_word(seed_, path_index_, counter_++);
    return static_cast<double>(w >> 11) * 0x1p-53 + 0x1p-54;
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t path_index() const { return path_index_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t path_index_;
  std::uint64_t counter_;
};

}  // namespace lpmc
