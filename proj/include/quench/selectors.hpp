// Copyright 2026 The quenchlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <unordered_map>
#include <variant>
#include <vector>

#include "quench/errors.hpp"
#include "quench/exact.hpp"
#include "quench/grid.hpp"
#include "quench/rng.hpp"
#include "quench/stats.hpp"

namespace quench {

// ---------------------------------------------------------------------------
// Selection schemes
// ---------------------------------------------------------------------------

// Monotone up-right path from (1,1) to (n_i, n_j); steps are +1 in i or +1
// in j, so the path has n_i + n_j - 1 sites, one per anti-diagonal level.
struct UpRightPathScheme {
  int n_i = 1;
  int n_j = 1;
};

// As UpRightPathScheme, but the path must visit every waypoint. Waypoints
// must be strictly increasing in both coordinates.
struct PathThroughScheme {
  int n_i = 1;
  int n_j = 1;
  std::vector<GridPoint> waypoints;
};

// Square grid; the path must avoid a centered square of side
// floor(beta_fraction * n). Forbidden rows and columns both span
// [ceil((n-s)/2) + 1, ceil((n-s)/2) + s] with s = floor(beta_fraction * n).
struct PathAvoidSquareScheme {
  int n = 1;
  double beta_fraction = 0.25;
};

// Uniform size-m subset of {0, ..., n-1}.
struct UniformSubsetScheme {
  std::int64_t n = 1;
  std::int64_t m = 1;
};

// Uniform permutation pi of (1..n); the selection is the n grid sites
// (i, pi(i)) of an n x n array, one per row with distinct columns.
struct UniformPermutationScheme {
  int n = 1;
};

using SelectionScheme =
    std::variant<UpRightPathScheme, PathThroughScheme, PathAvoidSquareScheme,
                 UniformSubsetScheme, UniformPermutationScheme>;

// One realized selection: flat site ids, path variants ordered by level,
// subsets ascending, permutations by row.
struct Selection {
  std::vector<std::size_t> sites;
  std::size_t size() const { return sites.size(); }
};

// ---------------------------------------------------------------------------
// Selector
// ---------------------------------------------------------------------------

// Immutable sampling/counting engine for one scheme. Construction validates
// parameters, builds the path DP tables, and fails with
// infeasible_scheme_error when no admissible configuration exists. All
// methods are const and safe to share across threads.
//
// Path variants keep exact big-integer suffix counts for n_i + n_j <= 4096
// (the default); larger grids switch to log-space counts, which support
// sampling only. Sampling in exact mode unranks a single uniform big integer
// below the total count, so it is exactly uniform by construction.
class Selector {
 public:
  explicit Selector(SelectionScheme scheme, bool force_log_space = false)
      : scheme_(std::move(scheme)) {
    std::visit([&](const auto& s) { init(s, force_log_space); }, scheme_);
  }

  const SelectionScheme& scheme() const { return scheme_; }
  bool is_path_scheme() const { return grid_.has_value(); }
  const GridShape& grid() const { return *grid_; }

  // Number of ground-set sites (grid cells, subset universe, or n^2 array).
  std::size_t ground_size() const { return ground_size_; }
  // Number of selected sites, fixed per scheme.
  std::size_t selection_size() const { return selection_size_; }

  // Exact number of admissible configurations.
  const BigInt& count() const {
    if (count_ == 0)
      throw unsupported_target_error(
          "count: exact counting unavailable in log-space mode for "
          "obstructed grids");
    return count_;
  }

  Selection sample(rng::Stream& stream) const {
    return std::visit([&](const auto& s) { return sample_impl(s, stream); },
                      scheme_);
  }

  // Exact inclusion probability P(site in selection) as a rational.
  BigRat inclusion(std::size_t site) const {
    if (site >= ground_size_) throw std::out_of_range("inclusion: site out of range");
    return std::visit([&](const auto& s) { return inclusion_impl(s, site); },
                      scheme_);
  }
  double inclusion_float(std::size_t site) const {
    return to_double(inclusion(site));
  }

  // L^2 = sum over the ground set of inclusion(site)^2, exact.
  BigRat l_statistic_squared() const {
    return std::visit([&](const auto& s) { return l_squared_impl(s); },
                      scheme_);
  }
  double l_statistic() const {
    return std::sqrt(to_double(l_statistic_squared()));
  }

  // All admissible selections, in a deterministic order. Guarded by `limit`
  // since counts grow combinatorially.
  std::vector<Selection> enumerate(std::uint64_t limit = 1u << 20) const {
    if (count_ == 0 || count_ > limit)
      throw parameter_error("enumerate: configuration count exceeds limit");
    return std::visit([&](const auto& s) { return enumerate_impl(s); },
                      scheme_);
  }

 private:
  // --- shared path machinery -----------------------------------------------

  void init_path(const GridShape& g, std::vector<std::uint8_t> allowed,
                 bool force_log_space) {
    grid_ = g;
    allowed_ = std::move(allowed);
    ground_size_ = g.cells();
    selection_size_ = static_cast<std::size_t>(g.n_i) + g.n_j - 1;
    log_space_ = force_log_space || (g.n_i + g.n_j > 4096);
    if (log_space_) {
      build_suffix_log();
      if (log_total_ == -std::numeric_limits<double>::infinity())
        throw infeasible_scheme_error("path scheme admits no configuration");
      // Exact totals stay available through the closed forms where they
      // exist; count_ remains 0 otherwise and count() reports the gap.
    } else {
      build_suffix_exact();
      count_ = suffix_[grid_->flat(1, 1)];
      if (count_ == 0)
        throw infeasible_scheme_error("path scheme admits no configuration");
    }
  }

  bool allowed(int i, int j) const { return allowed_[grid_->flat(i, j)] != 0; }

  void build_suffix_exact() {
    const auto& g = *grid_;
    suffix_.assign(g.cells(), BigInt(0));
    for (int j = g.n_j; j >= 1; --j)
      for (int i = g.n_i; i >= 1; --i) {
        if (!allowed(i, j)) continue;
        if (i == g.n_i && j == g.n_j) {
          suffix_[g.flat(i, j)] = 1;
          continue;
        }
        BigInt v = 0;
        if (i < g.n_i) v += suffix_[g.flat(i + 1, j)];
        if (j < g.n_j) v += suffix_[g.flat(i, j + 1)];
        suffix_[g.flat(i, j)] = std::move(v);
      }
  }

  static double log_add_exp(double a, double b) {
    if (a == -std::numeric_limits<double>::infinity()) return b;
    if (b == -std::numeric_limits<double>::infinity()) return a;
    const double hi = std::max(a, b);
    return hi + std::log1p(std::exp(std::min(a, b) - hi));
  }

  void build_suffix_log() {
    const auto& g = *grid_;
    const double ninf = -std::numeric_limits<double>::infinity();
    suffix_log_.assign(g.cells(), ninf);
    for (int j = g.n_j; j >= 1; --j)
      for (int i = g.n_i; i >= 1; --i) {
        if (!allowed(i, j)) continue;
        if (i == g.n_i && j == g.n_j) {
          suffix_log_[g.flat(i, j)] = 0.0;
          continue;
        }
        double v = ninf;
        if (i < g.n_i) v = log_add_exp(v, suffix_log_[g.flat(i + 1, j)]);
        if (j < g.n_j) v = log_add_exp(v, suffix_log_[g.flat(i, j + 1)]);
        suffix_log_[g.flat(i, j)] = v;
      }
    log_total_ = suffix_log_[g.flat(1, 1)];
  }

  Selection sample_path(rng::Stream& stream) const {
    const auto& g = *grid_;
    Selection sel;
    sel.sites.reserve(selection_size_);
    int i = 1, j = 1;
    sel.sites.push_back(g.flat(1, 1));
    if (!log_space_) {
      // Unranking: r indexes the path within the lexicographic order that
      // explores the i-step branch first. Exactly uniform.
      BigInt r = uniform_bigint_below(stream, count_);
      while (i < g.n_i || j < g.n_j) {
        const BigInt& down = (i < g.n_i) ? suffix_[g.flat(i + 1, j)] : zero_;
        if (r < down) {
          ++i;
        } else {
          r -= down;
          ++j;
        }
        sel.sites.push_back(g.flat(i, j));
      }
    } else {
      while (i < g.n_i || j < g.n_j) {
        const double ninf = -std::numeric_limits<double>::infinity();
        const double ld = (i < g.n_i) ? suffix_log_[g.flat(i + 1, j)] : ninf;
        const double lr = (j < g.n_j) ? suffix_log_[g.flat(i, j + 1)] : ninf;
        const double p_down = std::exp(ld - log_add_exp(ld, lr));
        if (rng::uniform01(stream) < p_down) ++i; else ++j;
        sel.sites.push_back(g.flat(i, j));
      }
    }
    return sel;
  }

  // Lazily built forward counts, needed for inclusion on constrained paths.
  const std::vector<BigInt>& prefix() const {
    if (prefix_.empty()) {
      const auto& g = *grid_;
      auto& pre = prefix_;
      pre.assign(g.cells(), BigInt(0));
      for (int j = 1; j <= g.n_j; ++j)
        for (int i = 1; i <= g.n_i; ++i) {
          if (!allowed(i, j)) continue;
          if (i == 1 && j == 1) {
            pre[g.flat(i, j)] = 1;
            continue;
          }
          BigInt v = 0;
          if (i > 1) v += pre[g.flat(i - 1, j)];
          if (j > 1) v += pre[g.flat(i, j - 1)];
          pre[g.flat(i, j)] = std::move(v);
        }
    }
    return prefix_;
  }

  void require_exact() const {
    if (log_space_)
      throw unsupported_target_error(
          "exact inclusion probabilities are kept only for n_i + n_j <= 4096");
  }

  BigRat path_inclusion(std::size_t site) const {
    require_exact();
    return BigRat(prefix()[site] * suffix_[site], count_);
  }

  // sum over cells of (prefix * suffix)^2 / total^2, streaming the prefix
  // row by row so only the suffix table is held in full.
  BigRat path_l_squared() const {
    require_exact();
    const auto& g = *grid_;
    BigInt sumsq = 0;
    std::vector<BigInt> prev(static_cast<std::size_t>(g.n_j) + 1);
    std::vector<BigInt> cur(static_cast<std::size_t>(g.n_j) + 1);
    for (int i = 1; i <= g.n_i; ++i) {
      for (int j = 1; j <= g.n_j; ++j) {
        BigInt p = 0;
        if (allowed(i, j)) {
          if (i == 1 && j == 1) {
            p = 1;
          } else {
            p = prev[static_cast<std::size_t>(j)] +
                cur[static_cast<std::size_t>(j) - 1];
          }
        }
        if (p != 0) {
          BigInt term = p * suffix_[g.flat(i, j)];
          sumsq += term * term;
        }
        cur[static_cast<std::size_t>(j)] = std::move(p);
      }
      std::swap(prev, cur);
    }
    return BigRat(sumsq, count_ * count_);
  }

  std::vector<Selection> enumerate_paths() const {
    const auto& g = *grid_;
    std::vector<Selection> all;
    std::vector<std::size_t> sites;
    sites.reserve(selection_size_);
    std::function<void(int, int)> walk = [&](int i, int j) {
      sites.push_back(g.flat(i, j));
      if (i == g.n_i && j == g.n_j) {
        all.push_back(Selection{sites});
      } else {
        if (i < g.n_i && allowed(i + 1, j)) walk(i + 1, j);
        if (j < g.n_j && allowed(i, j + 1)) walk(i, j + 1);
      }
      sites.pop_back();
    };
    if (allowed(1, 1)) walk(1, 1);
    return all;
  }

  // --- per-variant init -----------------------------------------------------

  void init(const UpRightPathScheme& s, bool force_log) {
    if (s.n_i < 1 || s.n_j < 1)
      throw parameter_error("UpRightPath: grid sides must be at least 1");
    init_path(GridShape{s.n_i, s.n_j},
              std::vector<std::uint8_t>(GridShape{s.n_i, s.n_j}.cells(), 1),
              force_log);
    if (count_ == 0)  // log-space mode; the closed form stays exact
      count_ = binomial(static_cast<std::uint64_t>(s.n_i + s.n_j - 2),
                        static_cast<std::uint64_t>(s.n_i - 1));
  }

  void init(const PathThroughScheme& s, bool force_log) {
    if (s.n_i < 1 || s.n_j < 1)
      throw parameter_error("PathThrough: grid sides must be at least 1");
    const GridShape g{s.n_i, s.n_j};
    for (const auto& wp : s.waypoints)
      if (!g.contains(wp.i, wp.j))
        throw parameter_error("PathThrough: waypoint outside the grid");
    for (std::size_t k = 1; k < s.waypoints.size(); ++k)
      if (!(s.waypoints[k].i > s.waypoints[k - 1].i &&
            s.waypoints[k].j > s.waypoints[k - 1].j))
        throw infeasible_scheme_error(
            "PathThrough: waypoints must be strictly increasing in both "
            "coordinates");
    // A monotone path hits each anti-diagonal level exactly once, so
    // "pass through (a,b)" is the same as "avoid every other cell at level
    // a+b-1". That turns the waypoint constraint into a plain cell mask.
    std::vector<std::uint8_t> mask(g.cells(), 1);
    for (const auto& wp : s.waypoints) {
      const int lvl = GridShape::level(wp.i, wp.j);
      for (int i = 1; i <= g.n_i; ++i) {
        const int j = lvl + 1 - i;
        if (j >= 1 && j <= g.n_j && !(i == wp.i && j == wp.j))
          mask[g.flat(i, j)] = 0;
      }
    }
    init_path(g, std::move(mask), force_log);
    if (count_ == 0) {  // log-space mode; product of segment binomials
      count_ = 1;
      GridPoint prev{1, 1};
      std::vector<GridPoint> stops = s.waypoints;
      stops.push_back(GridPoint{s.n_i, s.n_j});
      for (const auto& stop : stops) {
        count_ *= binomial(
            static_cast<std::uint64_t>(stop.i - prev.i + stop.j - prev.j),
            static_cast<std::uint64_t>(stop.i - prev.i));
        prev = stop;
      }
    }
  }

  void init(const PathAvoidSquareScheme& s, bool force_log) {
    if (s.n < 1) throw parameter_error("PathAvoidSquare: n must be at least 1");
    if (!(s.beta_fraction > 0.0 && s.beta_fraction < 1.0))
      throw parameter_error("PathAvoidSquare: beta must lie in (0, 1)");
    const GridShape g{s.n, s.n};
    const int side = static_cast<int>(std::floor(s.beta_fraction * s.n));
    std::vector<std::uint8_t> mask(g.cells(), 1);
    if (side >= 1) {
      const int base = (s.n - side + 1) / 2;  // ceil((n - side) / 2)
      for (int i = base + 1; i <= base + side; ++i)
        for (int j = base + 1; j <= base + side; ++j)
          mask[g.flat(i, j)] = 0;
    }
    init_path(g, std::move(mask), force_log);
  }

  void init(const UniformSubsetScheme& s, bool /*force_log*/) {
    if (s.n < 1 || s.m < 1 || s.m > s.n)
      throw parameter_error("UniformSubset: need 1 <= m <= n");
    ground_size_ = static_cast<std::size_t>(s.n);
    selection_size_ = static_cast<std::size_t>(s.m);
    count_ = binomial(static_cast<std::uint64_t>(s.n),
                      static_cast<std::uint64_t>(s.m));
  }

  void init(const UniformPermutationScheme& s, bool /*force_log*/) {
    if (s.n < 1) throw parameter_error("UniformPermutation: n must be at least 1");
    ground_size_ = static_cast<std::size_t>(s.n) * s.n;
    selection_size_ = static_cast<std::size_t>(s.n);
    count_ = factorial(static_cast<std::uint64_t>(s.n));
  }

  // --- per-variant sampling -------------------------------------------------

  Selection sample_impl(const UpRightPathScheme&, rng::Stream& st) const {
    return sample_path(st);
  }
  Selection sample_impl(const PathThroughScheme&, rng::Stream& st) const {
    return sample_path(st);
  }
  Selection sample_impl(const PathAvoidSquareScheme&, rng::Stream& st) const {
    return sample_path(st);
  }

  Selection sample_impl(const UniformSubsetScheme& s, rng::Stream& st) const {
    // Partial Fisher-Yates over a sparse view of 0..n-1; exactly uniform.
    std::unordered_map<std::int64_t, std::int64_t> moved;
    moved.reserve(2 * static_cast<std::size_t>(s.m));
    auto at = [&](std::int64_t idx) {
      const auto it = moved.find(idx);
      return it == moved.end() ? idx : it->second;
    };
    Selection sel;
    sel.sites.reserve(static_cast<std::size_t>(s.m));
    for (std::int64_t t = 0; t < s.m; ++t) {
      const std::int64_t r =
          t + static_cast<std::int64_t>(rng::uniform_below(
                  st, static_cast<std::uint64_t>(s.n - t)));
      const std::int64_t picked = at(r);
      moved[r] = at(t);
      sel.sites.push_back(static_cast<std::size_t>(picked));
    }
    std::sort(sel.sites.begin(), sel.sites.end());
    return sel;
  }

  Selection sample_impl(const UniformPermutationScheme& s,
                        rng::Stream& st) const {
    std::vector<int> pi(static_cast<std::size_t>(s.n));
    for (int k = 0; k < s.n; ++k) pi[static_cast<std::size_t>(k)] = k;
    for (int k = s.n - 1; k > 0; --k)
      std::swap(pi[static_cast<std::size_t>(k)],
                pi[rng::uniform_below(st, static_cast<std::uint64_t>(k) + 1)]);
    const GridShape g{s.n, s.n};
    Selection sel;
    sel.sites.reserve(static_cast<std::size_t>(s.n));
    for (int i = 1; i <= s.n; ++i)
      sel.sites.push_back(g.flat(i, pi[static_cast<std::size_t>(i - 1)] + 1));
    return sel;
  }

  // --- per-variant inclusion ------------------------------------------------

  BigRat inclusion_impl(const UpRightPathScheme& s, std::size_t site) const {
    require_exact();
    // paths through (i,j) split into a free prefix and a free suffix
    const int i = static_cast<int>(site % static_cast<std::size_t>(s.n_i)) + 1;
    const int j = static_cast<int>(site / static_cast<std::size_t>(s.n_i)) + 1;
    return BigRat(binomial(static_cast<std::uint64_t>(i + j - 2),
                           static_cast<std::uint64_t>(i - 1)) *
                      binomial(static_cast<std::uint64_t>(s.n_i - i + s.n_j - j),
                               static_cast<std::uint64_t>(s.n_i - i)),
                  count_);
  }
  BigRat inclusion_impl(const PathThroughScheme&, std::size_t site) const {
    return path_inclusion(site);
  }
  BigRat inclusion_impl(const PathAvoidSquareScheme&, std::size_t site) const {
    return path_inclusion(site);
  }
  BigRat inclusion_impl(const UniformSubsetScheme& s, std::size_t) const {
    return BigRat(s.m, s.n);
  }
  BigRat inclusion_impl(const UniformPermutationScheme& s, std::size_t) const {
    return BigRat(1, s.n);
  }

  // --- per-variant L^2 ------------------------------------------------------

  BigRat l_squared_impl(const UpRightPathScheme&) const { return path_l_squared(); }
  BigRat l_squared_impl(const PathThroughScheme&) const { return path_l_squared(); }
  BigRat l_squared_impl(const PathAvoidSquareScheme&) const { return path_l_squared(); }
  BigRat l_squared_impl(const UniformSubsetScheme& s) const {
    return BigRat(s.m * s.m, s.n);  // n sites, each with probability m/n
  }
  BigRat l_squared_impl(const UniformPermutationScheme&) const {
    return BigRat(1);  // n^2 sites, each with probability 1/n
  }

  // --- per-variant enumeration ----------------------------------------------

  std::vector<Selection> enumerate_impl(const UpRightPathScheme&) const {
    return enumerate_paths();
  }
  std::vector<Selection> enumerate_impl(const PathThroughScheme&) const {
    return enumerate_paths();
  }
  std::vector<Selection> enumerate_impl(const PathAvoidSquareScheme&) const {
    return enumerate_paths();
  }
  std::vector<Selection> enumerate_impl(const UniformSubsetScheme& s) const {
    std::vector<Selection> all;
    std::vector<std::size_t> combo(static_cast<std::size_t>(s.m));
    const auto m = static_cast<std::size_t>(s.m);
    const auto n = static_cast<std::size_t>(s.n);
    for (std::size_t k = 0; k < m; ++k) combo[k] = k;
    for (;;) {
      all.push_back(Selection{combo});
      std::size_t k = m;
      while (k > 0 && combo[k - 1] == n - m + k - 1) --k;
      if (k == 0) break;
      ++combo[k - 1];
      for (std::size_t t = k; t < m; ++t) combo[t] = combo[t - 1] + 1;
    }
    return all;
  }
  std::vector<Selection> enumerate_impl(const UniformPermutationScheme& s) const {
    const GridShape g{s.n, s.n};
    std::vector<int> pi(static_cast<std::size_t>(s.n));
    for (int k = 0; k < s.n; ++k) pi[static_cast<std::size_t>(k)] = k + 1;
    std::vector<Selection> all;
    do {
      Selection sel;
      sel.sites.reserve(static_cast<std::size_t>(s.n));
      for (int i = 1; i <= s.n; ++i)
        sel.sites.push_back(g.flat(i, pi[static_cast<std::size_t>(i - 1)]));
      all.push_back(std::move(sel));
    } while (std::next_permutation(pi.begin(), pi.end()));
    return all;
  }

  SelectionScheme scheme_;
  std::optional<GridShape> grid_;
  std::vector<std::uint8_t> allowed_;
  std::vector<BigInt> suffix_;
  std::vector<double> suffix_log_;
  mutable std::vector<BigInt> prefix_;
  BigInt count_ = 0;
  double log_total_ = 0.0;
  bool log_space_ = false;
  std::size_t ground_size_ = 0;
  std::size_t selection_size_ = 0;
  inline static const BigInt zero_ = 0;
};

// ---------------------------------------------------------------------------
// One-shot conveniences
// ---------------------------------------------------------------------------

inline BigInt count_configurations(const SelectionScheme& scheme) {
  return Selector(scheme).count();
}

inline Selection sample_selection(const SelectionScheme& scheme,
                                  rng::Stream& stream) {
  return Selector(scheme).sample(stream);
}

inline BigRat inclusion_probability(const SelectionScheme& scheme,
                                    std::size_t site) {
  return Selector(scheme).inclusion(site);
}

inline double l_statistic(const SelectionScheme& scheme) {
  return Selector(scheme).l_statistic();
}

// Least-squares slope of log L(N) against log N over a scheme family.
inline stats::LinearFit lambda_fit(
    const std::function<SelectionScheme(int)>& family,
    const std::vector<int>& sizes) {
  if (sizes.size() < 3)
    throw parameter_error("lambda_fit: need at least 3 sizes");
  for (std::size_t k = 1; k < sizes.size(); ++k)
    if (sizes[k] <= sizes[k - 1])
      throw parameter_error("lambda_fit: sizes must be increasing");
  std::vector<double> log_n, log_l;
  log_n.reserve(sizes.size());
  log_l.reserve(sizes.size());
  for (int n : sizes) {
    const Selector sel(family(n));
    log_n.push_back(std::log(static_cast<double>(n)));
    log_l.push_back(std::log(sel.l_statistic()));
  }
  return stats::linear_fit(log_n, log_l);
}

}  // namespace quench
