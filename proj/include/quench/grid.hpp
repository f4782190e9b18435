// Copyright 2026 The quenchlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>

namespace quench {

// Rectangular site grid. Cells are addressed (i, j) with i in [1, n_i] and
// j in [1, n_j]; the flat site id runs with i fastest:
//   flat(i, j) = (i - 1) + (j - 1) * n_i.
// Every grid-indexed module (environments, selectors, quenched sums) uses
// this one layout.
struct GridShape {
  int n_i = 1;
  int n_j = 1;

  std::size_t cells() const {
    return static_cast<std::size_t>(n_i) * static_cast<std::size_t>(n_j);
  }
  std::size_t flat(int i, int j) const {
    return static_cast<std::size_t>(i - 1) +
           static_cast<std::size_t>(j - 1) * static_cast<std::size_t>(n_i);
  }
  bool contains(int i, int j) const {
    return i >= 1 && i <= n_i && j >= 1 && j <= n_j;
  }
  // Anti-diagonal index: level(1,1) = 1, level(n_i, n_j) = n_i + n_j - 1.
  // A monotone up-right path visits exactly one cell per level.
  static int level(int i, int j) { return i + j - 1; }
};

struct GridPoint {
  int i = 1;
  int j = 1;
  friend bool operator==(const GridPoint&, const GridPoint&) = default;
};

}  // namespace quench
