// Copyright 2026 The quenchlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>

namespace quench {

// Invalid model, scheme, or normalization parameters.
class parameter_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A selection scheme with zero admissible configurations.
class infeasible_scheme_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Requested functional is not available for the given target law.
class unsupported_target_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace quench
