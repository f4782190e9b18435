// Copyright 2026 The quenchlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "quench/environments.hpp"
#include "quench/errors.hpp"
#include "quench/selectors.hpp"
#include "quench/stats.hpp"

namespace quench {

// ---------------------------------------------------------------------------
// Normalization of selected sums
// ---------------------------------------------------------------------------

// The selected sum is (sum over sites of (w_a - centering_a if centered))
// divided by:
//   m_power         m^{1/alpha} with the selection size m
//   explicit_value  a caller-supplied divisor
//   none            1 (the alpha = infinity case)
struct Normalization {
  enum class Divisor { m_power, explicit_value, none };

  Divisor mode = Divisor::m_power;
  double alpha = 2.0;
  double explicit_divisor = 1.0;
  bool center = true;

  static Normalization m_power(double alpha, bool center = true) {
    if (!(alpha > 0.0))
      throw parameter_error("Normalization: alpha must be positive");
    return Normalization{Divisor::m_power, alpha, 1.0, center};
  }
  static Normalization unnormalized(bool center = false) {
    return Normalization{Divisor::none,
                         std::numeric_limits<double>::infinity(), 1.0, center};
  }
  static Normalization with_divisor(double divisor, bool center = false) {
    if (divisor == 0.0)
      throw parameter_error("Normalization: divisor must be nonzero");
    return Normalization{Divisor::explicit_value, 2.0, divisor, center};
  }

  double divisor(std::size_t m) const {
    switch (mode) {
      case Divisor::m_power:
        return std::pow(static_cast<double>(m), 1.0 / alpha);
      case Divisor::explicit_value:
        return explicit_divisor;
      case Divisor::none:
        return 1.0;
    }
    return 1.0;
  }
};

// ---------------------------------------------------------------------------
// Empirical distributions
// ---------------------------------------------------------------------------

// Sorted, uniformly weighted real samples; the Monte Carlo stand-in for a
// quenched or annealed law.
class EmpiricalDistribution {
 public:
  explicit EmpiricalDistribution(std::vector<double> samples)
      : samples_(std::move(samples)) {
    if (samples_.empty())
      throw parameter_error("EmpiricalDistribution: need at least one sample");
    std::sort(samples_.begin(), samples_.end());
  }

  const std::vector<double>& samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }

  double cdf(double x) const {
    const auto it = std::upper_bound(samples_.begin(), samples_.end(), x);
    return static_cast<double>(it - samples_.begin()) /
           static_cast<double>(samples_.size());
  }

 private:
  std::vector<double> samples_;
};

// ---------------------------------------------------------------------------
// Quenched sums and measures
// ---------------------------------------------------------------------------

inline double quenched_sum(const WeightVector& w, const Selection& sel,
                           const Normalization& norm) {
  double total = 0.0;
  for (std::size_t site : sel.sites) {
    if (site >= w.size())
      throw std::out_of_range("quenched_sum: selection site not in environment");
    total += w.values[site] - (norm.center ? w.centering[site] : 0.0);
  }
  return total / norm.divisor(sel.size());
}

// n_sel independent selections against the one fixed environment.
inline EmpiricalDistribution sample_quenched_measure(const WeightVector& w,
                                                     const Selector& selector,
                                                     const Normalization& norm,
                                                     std::size_t n_sel,
                                                     rng::Stream& stream) {
  if (n_sel < 1)
    throw parameter_error("sample_quenched_measure: n_sel must be >= 1");
  std::vector<double> sums;
  sums.reserve(n_sel);
  for (std::size_t k = 0; k < n_sel; ++k)
    sums.push_back(quenched_sum(w, selector.sample(stream), norm));
  return EmpiricalDistribution(std::move(sums));
}

// The exact quenched law for schemes small enough to enumerate: one sample
// per admissible selection, each equally likely by uniformity.
inline EmpiricalDistribution exact_quenched_measure(const WeightVector& w,
                                                    const Selector& selector,
                                                    const Normalization& norm,
                                                    std::uint64_t limit = 1u << 20) {
  std::vector<double> sums;
  for (const Selection& sel : selector.enumerate(limit))
    sums.push_back(quenched_sum(w, sel, norm));
  return EmpiricalDistribution(std::move(sums));
}

inline double integrate(const EmpiricalDistribution& dist,
                        const std::function<double(double)>& f) {
  double total = 0.0;
  for (double x : dist.samples()) total += f(x);
  return total / static_cast<double>(dist.size());
}

// ---------------------------------------------------------------------------
// Test function bank
// ---------------------------------------------------------------------------

struct TestFunction {
  enum class Family { convex_lipschitz, bounded_lipschitz };
  std::string name;
  Family family;
  std::function<double(double)> f;
};

// Convex 1-Lipschitz family: hinges x -> max(x - theta, 0) on a theta grid,
// plus |x|.
inline std::vector<TestFunction> convex_test_bank(double theta_min = -5.0,
                                                  double theta_max = 5.0,
                                                  double step = 0.05) {
  std::vector<TestFunction> bank;
  for (double theta = theta_min; theta <= theta_max + 1e-12; theta += step)
    bank.push_back({"hinge(" + std::to_string(theta) + ")",
                    TestFunction::Family::convex_lipschitz,
                    [theta](double x) { return std::max(x - theta, 0.0); }});
  bank.push_back({"abs", TestFunction::Family::convex_lipschitz,
                  [](double x) { return std::abs(x); }});
  return bank;
}

// Bounded-Lipschitz family with |f|_BL <= 1: clamped ramps
// x -> min(1, max(0, x - theta)) and smoothed indicators
// x -> (1 + tanh(x - theta)) / 2 (Lipschitz constant 1/2, sup 1).
inline std::vector<TestFunction> bl_test_bank(double theta_min = -5.0,
                                              double theta_max = 5.0,
                                              double step = 0.05) {
  std::vector<TestFunction> bank;
  for (double theta = theta_min; theta <= theta_max + 1e-12; theta += step) {
    bank.push_back({"ramp(" + std::to_string(theta) + ")",
                    TestFunction::Family::bounded_lipschitz,
                    [theta](double x) {
                      return std::clamp(x - theta, 0.0, 1.0);
                    }});
    bank.push_back({"step(" + std::to_string(theta) + ")",
                    TestFunction::Family::bounded_lipschitz,
                    [theta](double x) {
                      return 0.5 * (1.0 + std::tanh(x - theta));
                    }});
  }
  return bank;
}

inline std::vector<TestFunction> test_function_bank(double theta_min = -5.0,
                                                    double theta_max = 5.0,
                                                    double step = 0.05) {
  auto bank = convex_test_bank(theta_min, theta_max, step);
  auto bl = bl_test_bank(theta_min, theta_max, step);
  bank.insert(bank.end(), std::make_move_iterator(bl.begin()),
              std::make_move_iterator(bl.end()));
  return bank;
}

// ---------------------------------------------------------------------------
// Paired estimates with common selections
// ---------------------------------------------------------------------------

struct PairedEstimate {
  double difference = 0.0;  // F_hat(w) - F_hat(w2)
  double stderr = 0.0;      // Monte Carlo standard error of the difference
};

// Estimates integral f d mu_w - integral f d mu_w2 for every bank function
// with the same selection draws on both sides (common random numbers), which
// cancels most of the selection noise in environment-to-environment
// comparisons.
inline std::vector<PairedEstimate> paired_integral_differences(
    const WeightVector& w, const WeightVector& w2, const Selector& selector,
    const Normalization& norm, const std::vector<TestFunction>& bank,
    std::size_t n_sel, rng::Stream& stream) {
  if (n_sel < 2)
    throw parameter_error("paired_integral_differences: n_sel must be >= 2");
  std::vector<double> sum(bank.size(), 0.0), sumsq(bank.size(), 0.0);
  for (std::size_t k = 0; k < n_sel; ++k) {
    const Selection sel = selector.sample(stream);
    const double a = quenched_sum(w, sel, norm);
    const double b = quenched_sum(w2, sel, norm);
    for (std::size_t t = 0; t < bank.size(); ++t) {
      const double d = bank[t].f(a) - bank[t].f(b);
      sum[t] += d;
      sumsq[t] += d * d;
    }
  }
  std::vector<PairedEstimate> out(bank.size());
  const double n = static_cast<double>(n_sel);
  for (std::size_t t = 0; t < bank.size(); ++t) {
    const double mean = sum[t] / n;
    const double var = std::max(0.0, (sumsq[t] / n - mean * mean) * n / (n - 1));
    out[t] = {mean, std::sqrt(var / n)};
  }
  return out;
}

}  // namespace quench
