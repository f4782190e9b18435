// Copyright 2026 The quenchlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "quench/errors.hpp"
#include "quench/quenched.hpp"
#include "quench/targets.hpp"

namespace quench {

// ---------------------------------------------------------------------------
// 1-Wasserstein
// ---------------------------------------------------------------------------

// Exact W1 between two empirical measures via the quantile coupling. With
// equal sizes this reduces to the mean |x_(i) - y_(i)| over sorted pairs.
// Breakpoint bookkeeping is integer (units of 1/(na*nb)), so the coupling
// itself is exact.
inline double w1_distance(const EmpiricalDistribution& a,
                          const EmpiricalDistribution& b) {
  const auto& xs = a.samples();
  const auto& ys = b.samples();
  const auto na = static_cast<std::int64_t>(xs.size());
  const auto nb = static_cast<std::int64_t>(ys.size());
  std::int64_t i = 0, j = 0, cur = 0;
  double total = 0.0;
  while (i < na && j < nb) {
    const std::int64_t bi = (i + 1) * nb;  // right end of x_(i)'s mass
    const std::int64_t bj = (j + 1) * na;
    const std::int64_t next = std::min(bi, bj);
    total += static_cast<double>(next - cur) *
             std::abs(xs[static_cast<std::size_t>(i)] -
                      ys[static_cast<std::size_t>(j)]);
    cur = next;
    if (bi == next) ++i;
    if (bj == next) ++j;
  }
  return total / (static_cast<double>(na) * static_cast<double>(nb));
}

// W1 against a target law via its quantile function evaluated at the sample
// midpoints; convolution-power targets fall back to the two-sample form.
inline double w1_distance(const EmpiricalDistribution& a,
                          const TargetLaw& target) {
  if (const auto* c = std::get_if<ConvolutionPowerTarget>(&target))
    return w1_distance(a, c->samples);
  const auto& xs = a.samples();
  const double n = static_cast<double>(xs.size());
  double total = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i)
    total += std::abs(xs[i] -
                      quantile(target, (static_cast<double>(i) + 0.5) / n));
  return total / n;
}

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov
// ---------------------------------------------------------------------------

inline double ks_distance(const EmpiricalDistribution& a,
                          const EmpiricalDistribution& b) {
  const auto& xs = a.samples();
  const auto& ys = b.samples();
  const double na = static_cast<double>(xs.size());
  const double nb = static_cast<double>(ys.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < xs.size() && j < ys.size()) {
    const double x = std::min(xs[i], ys[j]);
    while (i < xs.size() && xs[i] <= x) ++i;
    while (j < ys.size() && ys[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na -
                             static_cast<double>(j) / nb));
  }
  return d;
}

inline double ks_distance(const EmpiricalDistribution& a,
                          const TargetLaw& target) {
  if (const auto* c = std::get_if<ConvolutionPowerTarget>(&target))
    return ks_distance(a, c->samples);
  const auto& xs = a.samples();
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(target, xs[i]);
    d = std::max(d, std::max(static_cast<double>(i + 1) / n - f,
                             f - static_cast<double>(i) / n));
  }
  return d;
}

// ---------------------------------------------------------------------------
// Bounded-Lipschitz lower bound
// ---------------------------------------------------------------------------

// Maximum over the bounded-Lipschitz bank of the integral gap. This is a
// lower bound on d_BL (the true supremum runs over all |f|_BL <= 1), and is
// reported as such.
inline double bl_distance_lower_bound(const EmpiricalDistribution& a,
                                      const EmpiricalDistribution& b,
                                      const std::vector<TestFunction>& bank) {
  double best = 0.0;
  for (const auto& tf : bank) {
    if (tf.family != TestFunction::Family::bounded_lipschitz) continue;
    best = std::max(best, std::abs(integrate(a, tf.f) - integrate(b, tf.f)));
  }
  return best;
}

inline double bl_distance_lower_bound(const EmpiricalDistribution& a,
                                      const TargetLaw& target,
                                      const std::vector<TestFunction>& bank) {
  double best = 0.0;
  for (const auto& tf : bank) {
    if (tf.family != TestFunction::Family::bounded_lipschitz) continue;
    best = std::max(best, std::abs(integrate(a, tf.f) -
                                   expectation(target, tf.f)));
  }
  return best;
}

// ---------------------------------------------------------------------------
// Characteristic-function distance
// ---------------------------------------------------------------------------

// max over the t grid of |empirical CF(t) - exp(psi(t))|.
inline double cf_distance(
    const EmpiricalDistribution& a,
    const std::function<std::complex<double>(double)>& exponent,
    std::span<const double> t_grid) {
  double worst = 0.0;
  for (double t : t_grid) {
    std::complex<double> emp{0.0, 0.0};
    for (double x : a.samples())
      emp += std::complex<double>{std::cos(t * x), std::sin(t * x)};
    emp /= static_cast<double>(a.size());
    worst = std::max(worst, std::abs(emp - std::exp(exponent(t))));
  }
  return worst;
}

inline double cf_distance(const EmpiricalDistribution& a,
                          const StableFiniteNTarget& target,
                          std::span<const double> t_grid) {
  return cf_distance(
      a, [&](double t) { return characteristic_exponent(target, t); }, t_grid);
}

}  // namespace quench
