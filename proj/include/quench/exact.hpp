// Copyright 2026 The quenchlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cstdint>
#include <stdexcept>

#include "quench/rng.hpp"

namespace quench {

using BigInt = boost::multiprecision::cpp_int;
using BigRat = boost::multiprecision::cpp_rational;

// Exact binomial coefficient via the multiplicative formula; every
// intermediate division is exact.
inline BigInt binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  if (k > n - k) k = n - k;
  BigInt result = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    result *= n - k + i;
    result /= i;
  }
  return result;
}

inline BigInt factorial(std::uint64_t n) {
  BigInt result = 1;
  for (std::uint64_t i = 2; i <= n; ++i) result *= i;
  return result;
}

// Exactly uniform integer in [0, bound): draws msb(bound)+1 random bits and
// rejects values >= bound. Expected iterations < 2.
inline BigInt uniform_bigint_below(rng::Stream& s, const BigInt& bound) {
  if (bound <= 0) throw std::invalid_argument("uniform_bigint_below: bound must be positive");
  if (bound == 1) return 0;
  const unsigned bits = boost::multiprecision::msb(bound) + 1;
  const unsigned words = (bits + 63) / 64;
  const unsigned top_bits = bits - 64 * (words - 1);
  const std::uint64_t top_mask =
      top_bits >= 64 ? ~0ull : ((1ull << top_bits) - 1);
  for (;;) {
    BigInt r = s() & top_mask;
    for (unsigned w = 1; w < words; ++w) {
      r <<= 64;
      r |= BigInt(s());
    }
    if (r < bound) return r;
  }
}

inline double to_double(const BigInt& x) { return x.convert_to<double>(); }
inline double to_double(const BigRat& x) { return x.convert_to<double>(); }

}  // namespace quench
