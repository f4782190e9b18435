// Copyright 2026 The quenchlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <variant>
#include <vector>

#include "quench/errors.hpp"
#include "quench/quenched.hpp"
#include "quench/rng.hpp"

namespace quench {

// ---------------------------------------------------------------------------
// Normal distribution primitives
// ---------------------------------------------------------------------------

inline double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

// Inverse standard normal CDF: Acklam's rational approximation polished by a
// single Halley step against erfc, accurate to ~1e-15 over (0, 1).
inline double normal_quantile(double q) {
  if (!(q > 0.0 && q < 1.0))
    throw parameter_error("normal_quantile: q must lie in (0, 1)");
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00, 2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double lo = 0.02425, hi = 1 - 0.02425;
  double x;
  if (q < lo) {
    const double u = std::sqrt(-2.0 * std::log(q));
    x = (((((c[0] * u + c[1]) * u + c[2]) * u + c[3]) * u + c[4]) * u + c[5]) /
        ((((d[0] * u + d[1]) * u + d[2]) * u + d[3]) * u + 1.0);
  } else if (q <= hi) {
    const double u = q - 0.5, r = u * u;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
        u /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double u = std::sqrt(-2.0 * std::log(1.0 - q));
    x = -(((((c[0] * u + c[1]) * u + c[2]) * u + c[3]) * u + c[4]) * u + c[5]) /
        ((((d[0] * u + d[1]) * u + d[2]) * u + d[3]) * u + 1.0);
  }
  // one Halley step
  const double e = normal_cdf(x) - q;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  x -= u / (1.0 + 0.5 * x * u);
  return x;
}

// ---------------------------------------------------------------------------
// Target laws
// ---------------------------------------------------------------------------

struct Normal01Target {};

// Gamma with integer shape >= 1 and unit scale (Erlang).
struct GammaTarget {
  int shape = 1;
};

// m-fold convolution of a base law, represented by materialized samples of
// the m-fold sum (see convolution_oracle). Distances against it use the
// two-sample forms; only the CDF is available, not the quantile.
struct ConvolutionPowerTarget {
  EmpiricalDistribution samples;
  int m = 1;
};

// Law of the normalized layered-stable sum at finite depth n_levels; only
// characteristic-function functionals are available. The sum of one entry
// per level k = 1..n, each distributed k^{-tau} X, divided by
// n^{norm_exponent}.
struct StableFiniteNTarget {
  double alpha = 1.8;
  double tau = 2.0;
  double kappa = 1.0;
  double beta = 0.0;
  int n_levels = 1;
  double norm_exponent = 0.0;
};

using TargetLaw = std::variant<Normal01Target, GammaTarget,
                               ConvolutionPowerTarget, StableFiniteNTarget>;

// ---------------------------------------------------------------------------
// Characteristic exponents
// ---------------------------------------------------------------------------

// Exponent of the scalar alpha-stable law:
//   psi_X(t) = -kappa^alpha |t|^alpha (1 - i beta sign(t) tan(pi alpha/2)).
inline std::complex<double> stable_scalar_exponent(double t, double alpha,
                                                   double beta, double kappa) {
  if (t == 0.0) return {0.0, 0.0};
  const double mag = -std::pow(kappa, alpha) * std::pow(std::abs(t), alpha);
  const double skew =
      alpha == 2.0 ? 0.0
                   : beta * (t > 0 ? 1.0 : -1.0) *
                         std::tan(std::numbers::pi * alpha / 2.0);
  return {mag, -mag * skew};
}

// Exponent of (sum_{k=1}^{n} k^{-tau} X_k) / divisor with X_k independent
// copies of the alpha-stable law above. Exact finite-n expression.
inline std::complex<double> layered_sum_exponent(double t, double alpha,
                                                 double tau, double kappa,
                                                 double beta, int n_levels,
                                                 double divisor = 1.0) {
  if (n_levels < 1)
    throw parameter_error("layered_sum_exponent: n must be >= 1");
  if (!(divisor > 0.0))
    throw parameter_error("layered_sum_exponent: divisor must be positive");
  if (t == 0.0) return {0.0, 0.0};
  double series = 0.0;
  for (int k = 1; k <= n_levels; ++k)
    series += std::pow(static_cast<double>(k), -alpha * tau);
  const double mag = -std::pow(kappa, alpha) * series *
                     std::pow(std::abs(t) / divisor, alpha);
  const double skew =
      alpha == 2.0 ? 0.0
                   : beta * (t > 0 ? 1.0 : -1.0) *
                         std::tan(std::numbers::pi * alpha / 2.0);
  return {mag, -mag * skew};
}

// The finite-n partial sum of the layered limit exponent as printed:
//   psi_n(t) = -kappa^alpha (sum_{k<=n} k^{-alpha tau}) / n^{alpha/gamma}
//              |t|^alpha (1 - i beta sign(t) tan(pi alpha/2))
// with alpha/gamma = 1 - alpha tau, i.e. the exponent of the layered sum
// divided by n^{1/gamma}, 1/gamma = 1/alpha - tau.
inline std::complex<double> psi_finite_n(double t, double alpha, double tau,
                                         double kappa, double beta,
                                         int n_levels) {
  if (!(alpha > 1.5 && alpha < 2.0))
    throw parameter_error("psi_finite_n: alpha must lie in (3/2, 2)");
  if (!(tau > 0.0)) throw parameter_error("psi_finite_n: tau must be positive");
  return layered_sum_exponent(
      t, alpha, tau, kappa, beta, n_levels,
      std::pow(static_cast<double>(n_levels), 1.0 / alpha - tau));
}

inline std::complex<double> characteristic_exponent(
    const StableFiniteNTarget& target, double t) {
  return layered_sum_exponent(
      t, target.alpha, target.tau, target.kappa, target.beta, target.n_levels,
      std::pow(static_cast<double>(target.n_levels), target.norm_exponent));
}

// ---------------------------------------------------------------------------
// CDF / quantile / expectation
// ---------------------------------------------------------------------------

namespace detail {

inline double gamma_cdf(int shape, double x) {
  if (shape < 1) throw parameter_error("GammaTarget: shape must be >= 1");
  if (x <= 0.0) return 0.0;
  if (x > 700.0) return 1.0;
  // 1 - e^{-x} sum_{k<shape} x^k / k!  (integer shape)
  double term = std::exp(-x);
  double sum = term;
  for (int k = 1; k < shape; ++k) {
    term *= x / static_cast<double>(k);
    sum += term;
  }
  return 1.0 - sum;
}

inline double gamma_pdf(int shape, double x) {
  if (x <= 0.0) return 0.0;
  double log_fact = 0.0;
  for (int k = 2; k < shape; ++k) log_fact += std::log(static_cast<double>(k));
  return std::exp((shape - 1) * std::log(x) - x - log_fact);
}

inline double gamma_quantile(int shape, double q) {
  double lo = 0.0, hi = static_cast<double>(shape);
  while (gamma_cdf(shape, hi) < q) hi *= 2.0;
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (gamma_cdf(shape, mid) < q) lo = mid; else hi = mid;
    if (hi - lo < 1e-14 * (1.0 + hi)) break;
  }
  return 0.5 * (lo + hi);
}

inline double adaptive_simpson(const std::function<double(double)>& g,
                               double a, double b, double fa, double fm,
                               double fb, double whole, double tol,
                               int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = g(lm), frm = g(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return adaptive_simpson(g, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
         adaptive_simpson(g, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

inline double integrate_interval(const std::function<double(double)>& g,
                                 double a, double b, double tol = 1e-11) {
  const double m = 0.5 * (a + b);
  const double fa = g(a), fm = g(m), fb = g(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson(g, a, b, fa, fm, fb, whole, tol, 48);
}

}  // namespace detail

inline double cdf(const TargetLaw& target, double x) {
  if (std::holds_alternative<Normal01Target>(target)) return normal_cdf(x);
  if (const auto* g = std::get_if<GammaTarget>(&target))
    return detail::gamma_cdf(g->shape, x);
  if (const auto* c = std::get_if<ConvolutionPowerTarget>(&target))
    return c->samples.cdf(x);
  throw unsupported_target_error("cdf: not available for this target law");
}

inline double quantile(const TargetLaw& target, double q) {
  if (!(q > 0.0 && q < 1.0))
    throw parameter_error("quantile: q must lie in (0, 1)");
  if (std::holds_alternative<Normal01Target>(target)) return normal_quantile(q);
  if (const auto* g = std::get_if<GammaTarget>(&target))
    return detail::gamma_quantile(g->shape, q);
  if (std::holds_alternative<ConvolutionPowerTarget>(target))
    throw unsupported_target_error(
        "quantile: convolution-power targets expose the CDF only");
  throw unsupported_target_error("quantile: not available for this target law");
}

// E f(X) under the target: quadrature against the density for the analytic
// laws, the sample mean for convolution powers.
inline double expectation(const TargetLaw& target,
                          const std::function<double(double)>& f) {
  if (std::holds_alternative<Normal01Target>(target)) {
    return detail::integrate_interval(
        [&](double x) { return f(x) * normal_pdf(x); }, -14.0, 14.0);
  }
  if (const auto* g = std::get_if<GammaTarget>(&target)) {
    const double hi = detail::gamma_quantile(g->shape, 1.0 - 1e-14) + 40.0;
    return detail::integrate_interval(
        [&](double x) { return f(x) * detail::gamma_pdf(g->shape, x); }, 0.0,
        hi);
  }
  if (const auto* c = std::get_if<ConvolutionPowerTarget>(&target))
    return integrate(c->samples, f);
  throw unsupported_target_error(
      "expectation: not available for this target law");
}

// ---------------------------------------------------------------------------
// Convolution oracle
// ---------------------------------------------------------------------------

// Samples of the m-fold sum of the base law: each output is the sum of m
// independent with-replacement resamples of `base`. Output size equals the
// base size.
inline EmpiricalDistribution convolution_oracle(const EmpiricalDistribution& base,
                                                int m, rng::Stream& stream) {
  if (m < 1) throw parameter_error("convolution_oracle: m must be >= 1");
  const auto& xs = base.samples();
  const auto n = static_cast<std::uint64_t>(xs.size());
  std::vector<double> sums(xs.size());
  for (auto& s : sums) {
    double total = 0.0;
    for (int k = 0; k < m; ++k) total += xs[rng::uniform_below(stream, n)];
    s = total;
  }
  return EmpiricalDistribution(std::move(sums));
}

inline ConvolutionPowerTarget make_convolution_target(
    const EmpiricalDistribution& base, int m, rng::Stream& stream) {
  return ConvolutionPowerTarget{convolution_oracle(base, m, stream), m};
}

}  // namespace quench
