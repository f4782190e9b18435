// Copyright 2026 The quenchlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "quench/errors.hpp"

namespace quench {

// Inputs to the concentration-bound expressions. C, c, and K_alpha are the
// bounds' absolute constants; they carry no numeric values in the theory, so
// they default to 1 and are configurable. alpha is the rescaling exponent
// (may be infinity, meaning no rescaling); alpha_prime is the stability
// index used by the stable-vector bound. D and E are the annealed-distance
// offsets, supplied by the caller (see estimate_D).
struct BoundParams {
  double C = 1.0;
  double c = 1.0;
  double K_alpha = 1.0;
  double L = 1.0;
  double m = 1.0;
  double n = 1.0;
  double R = 1.0;
  double K = 1.0;
  double p = 2.0;
  double alpha = 2.0;
  double alpha_prime = 1.8;
  double levy_mass = 1.0;
  double D = 0.0;
  double E = 0.0;
};

namespace detail {
// m^{1/alpha}; equals 1 at alpha = infinity (the unrescaled case).
inline double m_power(double m, double alpha, double mult = 1.0) {
  return std::pow(m, mult / alpha);
}

inline void require_positive(bool ok, const char* what) {
  if (!ok) throw parameter_error(what);
}
}  // namespace detail

struct ThresholdTail {
  double threshold = 0.0;   // deviation level the bound is stated at
  double tail_raw = 0.0;    // bound value exactly as written
  double tail_clipped = 0.0;  // min(tail_raw, 1), for reporting
};

// Deviation threshold and tail bound of the truncation-based concentration
// inequality.
//   case 1 (1 <= p < 2):
//     threshold = D + L K n / (m^{1/a} R^{p-1}) + s + t
//     tail      = L K n / (m^{1/a} R^{p-1} s) + C exp(-c m^{2/a} t^2/(L^2 R^2))
//   case 2 (p >= 2, unit variance):
//     threshold = D + L sqrt(K n) / (m^{1/a} sqrt(R^{p-2})) + s + t
//     tail      = L^2 K n / (m^{2/a} R^{p-2} s^2) + C exp(same exponential)
inline ThresholdTail lemma22_threshold_and_tail(int moment_case,
                                                const BoundParams& q, double s,
                                                double t) {
  using detail::require_positive;
  require_positive(q.L > 0 && q.m > 0 && q.n > 0 && q.R > 0 && q.K > 0 &&
                       q.C > 0 && q.c > 0,
                   "lemma22: L, m, n, R, K, C, c must be positive");
  require_positive(s > 0 && t > 0, "lemma22: s and t must be positive");
  require_positive(q.alpha > 0, "lemma22: alpha must be positive");
  const double exp_term =
      q.C * std::exp(-q.c * detail::m_power(q.m, q.alpha, 2.0) * t * t /
                     (q.L * q.L * q.R * q.R));
  ThresholdTail out;
  if (moment_case == 1) {
    require_positive(q.p >= 1, "lemma22 case 1: p must be at least 1");
    const double trunc =
        q.L * q.K * q.n /
        (detail::m_power(q.m, q.alpha) * std::pow(q.R, q.p - 1.0));
    out.threshold = q.D + trunc + s + t;
    out.tail_raw = trunc / s + exp_term;
  } else if (moment_case == 2) {
    require_positive(q.p >= 2, "lemma22 case 2: p must be at least 2");
    const double trunc = q.L * std::sqrt(q.K * q.n) /
                         (detail::m_power(q.m, q.alpha) *
                          std::sqrt(std::pow(q.R, q.p - 2.0)));
    out.threshold = q.D + trunc + s + t;
    out.tail_raw = q.L * q.L * q.K * q.n /
                       (detail::m_power(q.m, q.alpha, 2.0) *
                        std::pow(q.R, q.p - 2.0) * s * s) +
                   exp_term;
  } else {
    throw parameter_error("lemma22: moment_case must be 1 or 2");
  }
  out.tail_clipped = std::min(out.tail_raw, 1.0);
  return out;
}

enum class ConcentrationKind { sgc, sec };

// Tail bounds for subgaussian / subexponential environments, exactly as
// stated: SGC gives C exp(-c m^{2/a}/L^2), SEC gives C exp(-c m^{1/a}/L).
// The deviation threshold is E + t with E caller-supplied.
inline ThresholdTail lemma23_tail(ConcentrationKind kind, const BoundParams& q,
                                  double t) {
  using detail::require_positive;
  require_positive(q.L > 0 && q.m > 0 && q.C > 0 && q.c > 0,
                   "lemma23: L, m, C, c must be positive");
  require_positive(t > 0, "lemma23: t must be positive");
  require_positive(q.alpha > 0, "lemma23: alpha must be positive");
  ThresholdTail out;
  out.threshold = q.E + t;
  out.tail_raw =
      kind == ConcentrationKind::sgc
          ? q.C * std::exp(-q.c * detail::m_power(q.m, q.alpha, 2.0) /
                           (q.L * q.L))
          : q.C * std::exp(-q.c * detail::m_power(q.m, q.alpha) / q.L);
  out.tail_clipped = std::min(out.tail_raw, 1.0);
  return out;
}

struct StableTail {
  double threshold = 0.0;  // D + t
  double tail = 0.0;       // K L^alpha levy_mass / (m t^alpha)
  bool valid = false;      // t^{alpha'} >= L^alpha K_{alpha'} levy_mass m^{-1/alpha}
};

// Polynomial tail bound for alpha'-stable environments, with its validity
// region. valid == false means the bound is not asserted at this t.
inline StableTail lemma26_tail_and_validity(const BoundParams& q, double t) {
  using detail::require_positive;
  require_positive(q.L > 0 && q.m > 0 && q.K > 0 && q.K_alpha > 0 &&
                       q.levy_mass >= 0,
                   "lemma26: L, m, K, K_alpha must be positive");
  require_positive(t > 0, "lemma26: t must be positive");
  require_positive(q.alpha > 0, "lemma26: alpha must be positive");
  require_positive(q.alpha_prime > 1.5, "lemma26: alpha' must exceed 3/2");
  StableTail out;
  out.threshold = q.D + t;
  out.tail = q.K * std::pow(q.L, q.alpha) * q.levy_mass /
             (q.m * std::pow(t, q.alpha));
  out.valid = std::pow(t, q.alpha_prime) >=
              std::pow(q.L, q.alpha) * q.K_alpha * q.levy_mass *
                  detail::m_power(q.m, q.alpha, -1.0);
  return out;
}

}  // namespace quench
