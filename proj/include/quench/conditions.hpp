// Copyright 2026 The quenchlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "quench/errors.hpp"

namespace quench {

// Growth exponents of the system in the size parameter N:
//   n = O(N^eta)   ground-set size
//   m = O(N^mu)    selection size        (mu <= eta)
//   L = O(N^lambda)
//   R = O(N^rho)   truncation radius (free parameter)
//   levy mass = O(N^-tau) for stable environments
// alpha is the rescaling exponent (infinity = unrescaled); p, K the moment
// order and bound.
struct ScalingRegime {
  double alpha = 2.0;
  double p = std::numeric_limits<double>::infinity();
  double K = 1.0;
  double eta = 2.0;
  double mu = 1.0;
  double lambda = 0.25;
  double rho = 0.0;
  double tau = 0.0;
};

enum class EnvironmentClass {
  independent_moment,  // independent weights with a p-th moment bound
  concentrated_sgc,    // subgaussian concentration for BL functions
  concentrated_sec,    // subexponential concentration
  stable_vector        // alpha'-stable environment with decaying Levy mass
};

struct ConvergenceReport {
  bool wip = false;
  bool almost_sure = false;
  // Strict lower bounds on p for the moment-environment branch; NaN when the
  // branch involves no moment condition.
  double wip_threshold = std::numeric_limits<double>::quiet_NaN();
  double as_threshold = std::numeric_limits<double>::quiet_NaN();
  std::string reason;
};

inline void validate(const ScalingRegime& r) {
  if (!(r.mu <= r.eta))
    throw parameter_error("ScalingRegime: mu must not exceed eta");
  if (!(r.alpha > 0))
    throw parameter_error("ScalingRegime: alpha must be positive");
}

// Strict-inequality convergence checks.
//
// independent_moment (finite alpha): WIP needs lambda < mu/alpha and
//   p > alpha eta / (mu - alpha lambda); almost-sure summability additionally
//   needs p > alpha (eta + 1) / (mu - alpha lambda).
//   alpha = infinity: requires lambda < 0, with thresholds eta/(-lambda) and
//   (eta + 1)/(-lambda).
// concentrated_sgc / concentrated_sec: the single condition mu/alpha > lambda
//   gives both conclusions (at alpha = infinity this reads 0 > lambda).
// stable_vector: WIP iff alpha lambda - tau - mu < 0; summability iff
//   alpha lambda + tau - mu < -1, both exactly as printed. Note the tau sign
//   flips between the two conditions as stated; the report flags this.
inline ConvergenceReport convergence_conditions(
    const ScalingRegime& r,
    EnvironmentClass env = EnvironmentClass::independent_moment) {
  validate(r);
  ConvergenceReport rep;
  const bool alpha_inf = std::isinf(r.alpha);
  switch (env) {
    case EnvironmentClass::independent_moment: {
      if (alpha_inf) {
        if (!(r.lambda < 0.0)) {
          rep.reason = "alpha = inf branch requires lambda < 0";
          return rep;
        }
        rep.wip_threshold = r.eta / (-r.lambda);
        rep.as_threshold = (r.eta + 1.0) / (-r.lambda);
        rep.wip = r.p > rep.wip_threshold;
        rep.almost_sure = r.p > rep.as_threshold;
        rep.reason = "moment conditions, unrescaled branch";
        return rep;
      }
      const double gap = r.mu - r.alpha * r.lambda;
      if (!(gap > 0.0)) {
        rep.reason = "requires lambda < mu/alpha";
        return rep;
      }
      rep.wip_threshold = r.alpha * r.eta / gap;
      rep.as_threshold = r.alpha * (r.eta + 1.0) / gap;
      rep.wip = r.p > rep.wip_threshold;
      rep.almost_sure = r.p > rep.as_threshold;
      rep.reason = "moment conditions";
      return rep;
    }
    case EnvironmentClass::concentrated_sgc:
    case EnvironmentClass::concentrated_sec: {
      const bool ok =
          alpha_inf ? (0.0 > r.lambda) : (r.mu / r.alpha > r.lambda);
      rep.wip = ok;
      rep.almost_sure = ok;
      rep.reason = ok ? "mu/alpha > lambda" : "requires mu/alpha > lambda";
      return rep;
    }
    case EnvironmentClass::stable_vector: {
      if (alpha_inf)
        throw parameter_error(
            "convergence_conditions: stable branch needs finite alpha");
      rep.wip = r.alpha * r.lambda - r.tau - r.mu < 0.0;
      rep.almost_sure = r.alpha * r.lambda + r.tau - r.mu < -1.0;
      rep.reason =
          "stable conditions as printed (tau enters the WIP and summability "
          "inequalities with opposite signs)";
      return rep;
    }
  }
  return rep;
}

}  // namespace quench
