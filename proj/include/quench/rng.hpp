// Copyright 2026 The quenchlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace quench::rng {

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;

// SplitMix64 finalizer; used for seeding and key mixing.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// xoshiro256++ stream. All samplers in this library draw from a Stream so
// that results are a pure function of (parameters, seed) on every platform;
// std::random distributions are implementation-defined and not used.
class Stream {
 public:
  explicit constexpr Stream(std::uint64_t seed) noexcept {
    std::uint64_t sm = seed;
    for (auto& word : state_) {
      sm += kGolden;
      word = mix64(sm);
    }
  }

  constexpr std::uint64_t operator()() noexcept {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t state_[4];
};

// Counter-derived substream: hashes (master, key...) into a fresh Stream.
// Replicates, sizes, and purposes get disjoint streams keyed by integers, so
// results are independent of thread scheduling.
inline Stream substream(std::uint64_t master,
                        std::initializer_list<std::uint64_t> key) {
  std::uint64_t h = mix64(master + kGolden);
  for (std::uint64_t k : key) h = mix64(h ^ (k + kGolden + (h << 1)));
  return Stream(h);
}

// Uniform on [0, 1), 53-bit resolution.
inline double uniform01(Stream& s) noexcept {
  return static_cast<double>(s() >> 11) * 0x1.0p-53;
}

// Uniform on (0, 1]; safe as a log() argument.
inline double uniform01_pos(Stream& s) noexcept {
  return static_cast<double>((s() >> 11) + 1) * 0x1.0p-53;
}

// Unbiased uniform integer in [0, n); n >= 1. Masked rejection.
inline std::uint64_t uniform_below(Stream& s, std::uint64_t n) noexcept {
  if (n <= 1) return 0;
  std::uint64_t mask = n - 1;
  mask |= mask >> 1;
  mask |= mask >> 2;
  mask |= mask >> 4;
  mask |= mask >> 8;
  mask |= mask >> 16;
  mask |= mask >> 32;
  for (;;) {
    const std::uint64_t x = s() & mask;
    if (x < n) return x;
  }
}

// Standard normal via Box-Muller (cosine branch).
inline double normal(Stream& s) noexcept {
  const double u = uniform01_pos(s);
  const double v = uniform01(s);
  return std::sqrt(-2.0 * std::log(u)) *
         std::cos(2.0 * std::numbers::pi * v);
}

// Exponential with rate 1.
inline double exponential(Stream& s) noexcept {
  return -std::log(uniform01_pos(s));
}

}  // namespace quench::rng
