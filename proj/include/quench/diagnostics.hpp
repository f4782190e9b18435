// Copyright 2026 The quenchlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "quench/distances.hpp"
#include "quench/environments.hpp"
#include "quench/quenched.hpp"
#include "quench/selectors.hpp"
#include "quench/targets.hpp"

namespace quench {

// Context needed to draw environments for a given selector: the ground size,
// plus the grid shape when the model is grid-indexed (layered).
struct EnvironmentShape {
  std::size_t n = 0;
  std::optional<GridShape> grid;

  static EnvironmentShape for_selector(const Selector& sel) {
    EnvironmentShape shape;
    shape.n = sel.ground_size();
    if (sel.is_path_scheme()) shape.grid = sel.grid();
    return shape;
  }
};

inline WeightVector sample_environment(const WeightModel& model,
                                       const EnvironmentShape& shape,
                                       rng::Stream& stream) {
  if (shape.grid) return sample_environment(model, *shape.grid, stream);
  return sample_environment(model, shape.n, stream);
}

// The law of the normalized sigma-sum over fresh environments, for one fixed
// selection: n_w replicates of quenched_sum with independent environments.
// Independent-entry models draw only the selected sites; exchangeable models
// (sphere, simplices) need the full vector.
inline EmpiricalDistribution sample_sigma_sum_law(const WeightModel& model,
                                                  const EnvironmentShape& shape,
                                                  const Selection& sigma,
                                                  const Normalization& norm,
                                                  std::size_t n_w,
                                                  rng::Stream& stream) {
  if (n_w < 1)
    throw parameter_error("sample_sigma_sum_law: n_w must be >= 1");
  validate(model);
  const double div = norm.divisor(sigma.size());
  std::vector<double> sums;
  sums.reserve(n_w);
  if (const auto* iid = std::get_if<IidMomentModel>(&model)) {
    for (std::size_t r = 0; r < n_w; ++r) {
      double total = 0.0;
      for (std::size_t k = 0; k < sigma.size(); ++k)
        total += detail::sample_base(iid->base, iid->nu, stream);
      sums.push_back(total / div);
    }
  } else if (const auto* layered = std::get_if<LayeredStableModel>(&model)) {
    if (!shape.grid)
      throw parameter_error("sample_sigma_sum_law: layered model needs a grid");
    std::vector<double> scales;
    scales.reserve(sigma.size());
    for (std::size_t site : sigma.sites) {
      const int i = static_cast<int>(site % static_cast<std::size_t>(
                                                shape.grid->n_i)) + 1;
      const int j = static_cast<int>(site / static_cast<std::size_t>(
                                                shape.grid->n_i)) + 1;
      scales.push_back(
          layered_level_scale(GridShape::level(i, j), layered->tau));
    }
    for (std::size_t r = 0; r < n_w; ++r) {
      double total = 0.0;
      for (double s : scales)
        total += s * sample_stable_scalar(layered->alpha, layered->beta,
                                          layered->kappa, stream);
      sums.push_back(total / div);
    }
  } else {
    for (std::size_t r = 0; r < n_w; ++r) {
      const WeightVector w = sample_environment(model, shape, stream);
      sums.push_back(quenched_sum(w, sigma, norm));
    }
  }
  return EmpiricalDistribution(std::move(sums));
}

enum class AnnealedMetric { w1, bl };

// Sampled lower bound on D = max over sigma of d_W(rho_sigma, target) (or E
// with the bounded-Lipschitz bank): the max over n_sigma sampled selections
// of the estimated distance between the sigma-sum law (n_w environment
// draws) and the target. A lower bound both because the max is sampled and
// because the BL metric uses a finite bank.
inline double estimate_D(const Selector& selector, const WeightModel& model,
                         const Normalization& norm, const TargetLaw& target,
                         std::size_t n_sigma, std::size_t n_w,
                         rng::Stream& stream,
                         AnnealedMetric metric = AnnealedMetric::w1,
                         const std::vector<TestFunction>* bl_bank = nullptr) {
  if (n_sigma < 1) throw parameter_error("estimate_D: n_sigma must be >= 1");
  const EnvironmentShape shape = EnvironmentShape::for_selector(selector);
  double worst = 0.0;
  for (std::size_t s = 0; s < n_sigma; ++s) {
    const Selection sigma = selector.sample(stream);
    const EmpiricalDistribution rho =
        sample_sigma_sum_law(model, shape, sigma, norm, n_w, stream);
    double dist;
    if (metric == AnnealedMetric::w1) {
      dist = w1_distance(rho, target);
    } else {
      static const std::vector<TestFunction> default_bank = bl_test_bank();
      dist = bl_distance_lower_bound(rho, target,
                                     bl_bank ? *bl_bank : default_bank);
    }
    worst = std::max(worst, dist);
  }
  return worst;
}

}  // namespace quench
