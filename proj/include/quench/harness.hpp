// Copyright 2026 The quenchlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "quench/diagnostics.hpp"
#include "quench/distances.hpp"
#include "quench/environments.hpp"
#include "quench/errors.hpp"
#include "quench/quenched.hpp"
#include "quench/selectors.hpp"
#include "quench/stats.hpp"
#include "quench/targets.hpp"

namespace quench::harness {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

enum class Metric { w1, ks, bl, cf };

inline const char* to_string(Metric m) {
  switch (m) {
    case Metric::w1: return "w1";
    case Metric::ks: return "ks";
    case Metric::bl: return "bl";
    case Metric::cf: return "cf";
  }
  return "?";
}

inline Metric metric_from_string(const std::string& s) {
  if (s == "w1") return Metric::w1;
  if (s == "ks") return Metric::ks;
  if (s == "bl") return Metric::bl;
  if (s == "cf") return Metric::cf;
  throw parameter_error("unknown metric: " + s);
}

struct SchemeFamilyConfig {
  enum class Kind { uprr, uprr_through, uprr_avoid, subset, permutation };
  Kind kind = Kind::uprr;
  double aspect = 1.0;  // grid schemes: n_j = round(aspect * N)
  std::vector<std::pair<double, double>> waypoint_fractions;  // (zeta, xi)
  double avoid_beta = 0.25;
  enum class GroundGrowth { linear, square };
  GroundGrowth subset_n = GroundGrowth::linear;
  enum class SelectionGrowth { fixed, linear };
  SelectionGrowth subset_m = SelectionGrowth::fixed;
  std::int64_t subset_m_value = 1;

  SelectionScheme at(int n) const {
    const int m_j = std::max(1, static_cast<int>(std::lround(aspect * n)));
    switch (kind) {
      case Kind::uprr:
        return UpRightPathScheme{n, m_j};
      case Kind::uprr_through: {
        PathThroughScheme s{n, m_j, {}};
        for (const auto& [zeta, xi] : waypoint_fractions)
          s.waypoints.push_back(
              GridPoint{static_cast<int>(std::ceil(zeta * n)),
                        static_cast<int>(std::ceil(xi * m_j))});
        return s;
      }
      case Kind::uprr_avoid:
        return PathAvoidSquareScheme{n, avoid_beta};
      case Kind::subset: {
        const std::int64_t ground =
            subset_n == GroundGrowth::linear
                ? static_cast<std::int64_t>(n)
                : static_cast<std::int64_t>(n) * n;
        const std::int64_t m = subset_m == SelectionGrowth::fixed
                                   ? subset_m_value
                                   : static_cast<std::int64_t>(n);
        return UniformSubsetScheme{ground, m};
      }
      case Kind::permutation:
        return UniformPermutationScheme{n};
    }
    throw parameter_error("unknown scheme kind");
  }
};

struct NormConfig {
  enum class Mode { m_power, none, exponent, stable_gamma };
  Mode mode = Mode::m_power;
  double alpha = 2.0;
  double exponent = 0.0;  // Mode::exponent: divisor = m^exponent
  bool center = true;

  // The divisor exponent g such that divisor = m^g.
  double divisor_exponent(const WeightModel& model) const {
    switch (mode) {
      case Mode::m_power: return 1.0 / alpha;
      case Mode::none: return 0.0;
      case Mode::exponent: return exponent;
      case Mode::stable_gamma: {
        const auto* layered = std::get_if<LayeredStableModel>(&model);
        if (!layered)
          throw parameter_error(
              "norm mode stable-gamma requires a layered model");
        return 1.0 / layered->alpha - layered->tau;
      }
    }
    return 0.0;
  }

  Normalization at(std::size_t m, const WeightModel& model) const {
    switch (mode) {
      case Mode::m_power: return Normalization::m_power(alpha, center);
      case Mode::none: return Normalization::unnormalized(center);
      default:
        return Normalization::with_divisor(
            std::pow(static_cast<double>(m), divisor_exponent(model)), center);
    }
  }
};

struct TargetConfig {
  enum class Kind { normal01, gamma, convpower, stable_finite_n };
  Kind kind = Kind::normal01;
  int gamma_shape = 1;
  int conv_m = 1;
};

struct ExperimentConfig {
  WeightModel model;
  SchemeFamilyConfig scheme;
  NormConfig norm;
  TargetConfig target;
  std::vector<int> sizes;
  int n_env = 50;
  std::size_t n_sel = 2000;
  std::vector<Metric> metrics;
  std::vector<double> cf_grid;
  double epsilon = 0.05;
  std::uint64_t seed = 1;
  std::string output = "result.csv";
  enum class Format { csv, json };
  Format format = Format::csv;
};

inline void validate(const ExperimentConfig& cfg) {
  if (cfg.sizes.empty()) throw parameter_error("config: sizes must be nonempty");
  for (std::size_t k = 1; k < cfg.sizes.size(); ++k)
    if (cfg.sizes[k] <= cfg.sizes[k - 1])
      throw parameter_error("config: sizes must be strictly increasing");
  if (cfg.n_env < 1) throw parameter_error("config: n_env must be >= 1");
  if (cfg.n_sel < 1) throw parameter_error("config: n_sel must be >= 1");
  if (!(cfg.epsilon > 0)) throw parameter_error("config: epsilon must be positive");
  if (cfg.metrics.empty()) throw parameter_error("config: metrics must be nonempty");
  validate(cfg.model);
  const bool stable_target = cfg.target.kind == TargetConfig::Kind::stable_finite_n;
  for (Metric m : cfg.metrics) {
    if ((m == Metric::cf) != stable_target)
      throw parameter_error(
          "config: the cf metric pairs with (and only with) the "
          "stable-finite-n target");
  }
  if (stable_target && cfg.cf_grid.empty())
    throw parameter_error("config: cf metric needs a nonempty cf_grid");
  if (cfg.target.kind == TargetConfig::Kind::convpower &&
      !std::holds_alternative<IidMomentModel>(cfg.model))
    throw parameter_error("config: convpower target needs an iid model");
}

// ---------------------------------------------------------------------------
// Config text format
// ---------------------------------------------------------------------------
//
// Flat key = value lines with one nesting level:
//
//   sizes = 16 32 64          # top-level scalar or list values
//   model {                   # one block per component
//     kind = iid
//     base = uniform
//   }
//
// '#' starts a comment; blank lines are ignored. Keys and block names are
// lower-case identifiers. Lists are space-separated. Waypoints are
// zeta:xi fraction pairs. See the repository README for the full grammar.

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

inline std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

inline double parse_double(const std::string& s, const std::string& key) {
  if (s == "inf" || s == "infinity")
    return std::numeric_limits<double>::infinity();
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw parameter_error("config: bad numeric value for '" + key + "': " + s);
  }
}

inline std::int64_t parse_int(const std::string& s, const std::string& key) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw parameter_error("config: bad integer value for '" + key + "': " + s);
  }
}

inline bool parse_bool(const std::string& s, const std::string& key) {
  if (s == "true" || s == "on" || s == "1") return true;
  if (s == "false" || s == "off" || s == "0") return false;
  throw parameter_error("config: bad boolean value for '" + key + "': " + s);
}

struct KvBlocks {
  std::map<std::string, std::string> top;
  std::map<std::string, std::map<std::string, std::string>> blocks;
};

inline KvBlocks parse_kv_blocks(const std::string& text) {
  KvBlocks out;
  std::istringstream in(text);
  std::string raw;
  std::string current_block;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    if (line == "}") {
      if (current_block.empty())
        throw parameter_error("config: stray '}' at line " +
                              std::to_string(lineno));
      current_block.clear();
      continue;
    }
    if (line.back() == '{') {
      if (!current_block.empty())
        throw parameter_error("config: nested blocks are not supported (line " +
                              std::to_string(lineno) + ")");
      current_block = trim(line.substr(0, line.size() - 1));
      if (current_block.empty())
        throw parameter_error("config: unnamed block at line " +
                              std::to_string(lineno));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw parameter_error("config: expected 'key = value' at line " +
                            std::to_string(lineno));
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw parameter_error("config: empty key or value at line " +
                            std::to_string(lineno));
    if (current_block.empty())
      out.top[key] = value;
    else
      out.blocks[current_block][key] = value;
  }
  if (!current_block.empty())
    throw parameter_error("config: unterminated block '" + current_block + "'");
  return out;
}

inline const std::string& require(const std::map<std::string, std::string>& kv,
                                  const std::string& key,
                                  const std::string& where) {
  const auto it = kv.find(key);
  if (it == kv.end())
    throw parameter_error("config: missing '" + key + "' in " + where);
  return it->second;
}

inline std::optional<std::string> lookup(
    const std::map<std::string, std::string>& kv, const std::string& key) {
  const auto it = kv.find(key);
  if (it == kv.end()) return std::nullopt;
  return it->second;
}

}  // namespace detail

inline ExperimentConfig parse_experiment_config(const std::string& text) {
  using namespace detail;
  const KvBlocks kv = parse_kv_blocks(text);
  ExperimentConfig cfg;

  // model block
  {
    const auto it = kv.blocks.find("model");
    if (it == kv.blocks.end()) throw parameter_error("config: missing model block");
    const auto& b = it->second;
    const std::string kind = require(b, "kind", "model");
    if (kind == "iid") {
      IidMomentModel m;
      const std::string base = require(b, "base", "model");
      if (base == "rademacher") m.base = BaseLaw::rademacher;
      else if (base == "uniform") m.base = BaseLaw::uniform;
      else if (base == "gaussian") m.base = BaseLaw::gaussian;
      else if (base == "exp-centered") m.base = BaseLaw::exp_centered;
      else if (base == "student-t") m.base = BaseLaw::student_t;
      else throw parameter_error("config: unknown base law: " + base);
      if (auto v = lookup(b, "p")) m.p = parse_double(*v, "p");
      if (auto v = lookup(b, "K")) m.K = parse_double(*v, "K");
      if (auto v = lookup(b, "nu")) m.nu = parse_double(*v, "nu");
      cfg.model = m;
    } else if (kind == "sphere") {
      cfg.model = SphereUniformModel{};
    } else if (kind == "simplex-eq") {
      cfg.model = SimplexEqModel{};
    } else if (kind == "simplex-le") {
      cfg.model = SimplexLeModel{};
    } else if (kind == "layered") {
      LayeredStableModel m;
      m.alpha = parse_double(require(b, "alpha", "model"), "alpha");
      m.tau = parse_double(require(b, "tau", "model"), "tau");
      if (auto v = lookup(b, "kappa")) m.kappa = parse_double(*v, "kappa");
      if (auto v = lookup(b, "beta")) m.beta = parse_double(*v, "beta");
      cfg.model = m;
    } else {
      throw parameter_error("config: unknown model kind: " + kind);
    }
  }

  // scheme block
  {
    const auto it = kv.blocks.find("scheme");
    if (it == kv.blocks.end()) throw parameter_error("config: missing scheme block");
    const auto& b = it->second;
    const std::string kind = require(b, "kind", "scheme");
    auto& s = cfg.scheme;
    if (kind == "uprr") s.kind = SchemeFamilyConfig::Kind::uprr;
    else if (kind == "uprr-through") s.kind = SchemeFamilyConfig::Kind::uprr_through;
    else if (kind == "uprr-avoid") s.kind = SchemeFamilyConfig::Kind::uprr_avoid;
    else if (kind == "subset") s.kind = SchemeFamilyConfig::Kind::subset;
    else if (kind == "permutation") s.kind = SchemeFamilyConfig::Kind::permutation;
    else throw parameter_error("config: unknown scheme kind: " + kind);
    if (auto v = lookup(b, "aspect")) s.aspect = parse_double(*v, "aspect");
    if (auto v = lookup(b, "beta")) s.avoid_beta = parse_double(*v, "beta");
    if (auto v = lookup(b, "waypoints")) {
      for (const std::string& tok : split_ws(*v)) {
        const auto colon = tok.find(':');
        if (colon == std::string::npos)
          throw parameter_error("config: waypoint must be zeta:xi, got " + tok);
        s.waypoint_fractions.emplace_back(
            parse_double(tok.substr(0, colon), "waypoints"),
            parse_double(tok.substr(colon + 1), "waypoints"));
      }
    }
    if (auto v = lookup(b, "n")) {
      if (*v == "linear") s.subset_n = SchemeFamilyConfig::GroundGrowth::linear;
      else if (*v == "square") s.subset_n = SchemeFamilyConfig::GroundGrowth::square;
      else throw parameter_error("config: scheme n must be linear or square");
    }
    if (auto v = lookup(b, "m")) {
      if (*v == "fixed") s.subset_m = SchemeFamilyConfig::SelectionGrowth::fixed;
      else if (*v == "linear") s.subset_m = SchemeFamilyConfig::SelectionGrowth::linear;
      else throw parameter_error("config: scheme m must be fixed or linear");
    }
    if (auto v = lookup(b, "m_value"))
      s.subset_m_value = parse_int(*v, "m_value");
  }

  // norm block
  if (const auto it = kv.blocks.find("norm"); it != kv.blocks.end()) {
    const auto& b = it->second;
    auto& n = cfg.norm;
    if (auto v = lookup(b, "mode")) {
      if (*v == "mpower") n.mode = NormConfig::Mode::m_power;
      else if (*v == "none") n.mode = NormConfig::Mode::none;
      else if (*v == "exponent") n.mode = NormConfig::Mode::exponent;
      else if (*v == "stable-gamma") n.mode = NormConfig::Mode::stable_gamma;
      else throw parameter_error("config: unknown norm mode: " + *v);
    }
    if (auto v = lookup(b, "alpha")) n.alpha = parse_double(*v, "alpha");
    if (auto v = lookup(b, "exponent")) n.exponent = parse_double(*v, "exponent");
    if (auto v = lookup(b, "center")) n.center = parse_bool(*v, "center");
  }

  // target block
  if (const auto it = kv.blocks.find("target"); it != kv.blocks.end()) {
    const auto& b = it->second;
    const std::string kind = require(b, "kind", "target");
    if (kind == "normal01") cfg.target.kind = TargetConfig::Kind::normal01;
    else if (kind == "gamma") {
      cfg.target.kind = TargetConfig::Kind::gamma;
      cfg.target.gamma_shape = static_cast<int>(
          parse_int(require(b, "shape", "target"), "shape"));
    } else if (kind == "convpower") {
      cfg.target.kind = TargetConfig::Kind::convpower;
      cfg.target.conv_m =
          static_cast<int>(parse_int(require(b, "m", "target"), "m"));
    } else if (kind == "stable-finite-n") {
      cfg.target.kind = TargetConfig::Kind::stable_finite_n;
    } else {
      throw parameter_error("config: unknown target kind: " + kind);
    }
  }

  // top level
  {
    const auto& t = kv.top;
    for (const std::string& tok :
         detail::split_ws(detail::require(t, "sizes", "top level")))
      cfg.sizes.push_back(static_cast<int>(detail::parse_int(tok, "sizes")));
    if (auto v = detail::lookup(t, "n_env"))
      cfg.n_env = static_cast<int>(detail::parse_int(*v, "n_env"));
    if (auto v = detail::lookup(t, "n_sel"))
      cfg.n_sel = static_cast<std::size_t>(detail::parse_int(*v, "n_sel"));
    for (const std::string& tok :
         detail::split_ws(detail::require(t, "metrics", "top level")))
      cfg.metrics.push_back(metric_from_string(tok));
    if (auto v = detail::lookup(t, "cf_grid"))
      for (const std::string& tok : detail::split_ws(*v))
        cfg.cf_grid.push_back(detail::parse_double(tok, "cf_grid"));
    if (auto v = detail::lookup(t, "epsilon"))
      cfg.epsilon = detail::parse_double(*v, "epsilon");
    if (auto v = detail::lookup(t, "seed"))
      cfg.seed = static_cast<std::uint64_t>(detail::parse_int(*v, "seed"));
    if (auto v = detail::lookup(t, "output")) cfg.output = *v;
    if (auto v = detail::lookup(t, "format")) {
      if (*v == "csv") cfg.format = ExperimentConfig::Format::csv;
      else if (*v == "json") cfg.format = ExperimentConfig::Format::json;
      else throw parameter_error("config: format must be csv or json");
    }
  }

  validate(cfg);
  return cfg;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw parameter_error("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_experiment_config(buf.str());
}

// ---------------------------------------------------------------------------
// Results
// ---------------------------------------------------------------------------

struct ExperimentResult {
  struct Row {
    int size;
    int rep;
    Metric metric;
    double value;
  };
  struct Summary {
    int size;
    Metric metric;
    double median;
    double q10;
    double q90;
    double tail_fraction;  // fraction of replicates with value > epsilon
  };
  struct Rate {
    Metric metric;
    stats::LinearFit fit;
  };

  std::vector<int> sizes;
  std::vector<Metric> metrics;
  int n_env = 0;
  double epsilon = 0.0;
  std::vector<Row> rows;
  std::vector<Summary> summaries;
  std::vector<Rate> rate_fits;
};

// Per-size fraction of environment replicates with metric value > epsilon.
inline std::vector<std::pair<int, double>> wip_tail(
    const ExperimentResult& result, Metric metric, double epsilon) {
  if (std::find(result.metrics.begin(), result.metrics.end(), metric) ==
      result.metrics.end())
    throw parameter_error(std::string("wip_tail: metric not present: ") +
                          to_string(metric));
  std::vector<std::pair<int, double>> out;
  for (int size : result.sizes) {
    std::int64_t above = 0, total = 0;
    for (const auto& row : result.rows) {
      if (row.size != size || row.metric != metric) continue;
      ++total;
      if (row.value > epsilon) ++above;
    }
    out.emplace_back(size, static_cast<double>(above) /
                               static_cast<double>(total));
  }
  return out;
}

// Least-squares slope of log median-metric against log size.
inline stats::LinearFit rate_fit(const ExperimentResult& result, Metric metric) {
  if (std::find(result.metrics.begin(), result.metrics.end(), metric) ==
      result.metrics.end())
    throw parameter_error(std::string("rate_fit: metric not present: ") +
                          to_string(metric));
  std::vector<double> log_n, log_med;
  for (int size : result.sizes) {
    std::vector<double> vals;
    for (const auto& row : result.rows)
      if (row.size == size && row.metric == metric) vals.push_back(row.value);
    const double med = stats::median(std::move(vals));
    if (med > 0.0) {
      log_n.push_back(std::log(static_cast<double>(size)));
      log_med.push_back(std::log(med));
    }
  }
  if (log_n.size() < 3) {
    stats::LinearFit fit;
    fit.degenerate = true;
    return fit;
  }
  return stats::linear_fit(log_n, log_med);
}

// ---------------------------------------------------------------------------
// Runner
// ---------------------------------------------------------------------------

inline unsigned resolve_thread_count(unsigned requested = 0) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("QUENCH_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return static_cast<unsigned>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

namespace detail {

inline TargetLaw build_target(const ExperimentConfig& cfg, const Selector& sel,
                              int size) {
  switch (cfg.target.kind) {
    case TargetConfig::Kind::normal01:
      return Normal01Target{};
    case TargetConfig::Kind::gamma:
      return GammaTarget{cfg.target.gamma_shape};
    case TargetConfig::Kind::convpower: {
      // Base sample and resampling noise are keyed to (seed, size) only, so
      // the target is identical across replicates and thread counts.
      const auto& iid = std::get<IidMomentModel>(cfg.model);
      rng::Stream ts = rng::substream(
          cfg.seed, {4, static_cast<std::uint64_t>(size)});
      std::vector<double> base(cfg.n_sel);
      for (auto& v : base) v = quench::detail::sample_base(iid.base, iid.nu, ts);
      return make_convolution_target(EmpiricalDistribution(std::move(base)),
                                     cfg.target.conv_m, ts);
    }
    case TargetConfig::Kind::stable_finite_n: {
      const auto* layered = std::get_if<LayeredStableModel>(&cfg.model);
      if (!layered)
        throw parameter_error(
            "config: stable-finite-n target needs a layered model");
      if (!sel.is_path_scheme())
        throw parameter_error(
            "config: stable-finite-n target needs a path scheme");
      return StableFiniteNTarget{
          layered->alpha, layered->tau, layered->kappa, layered->beta,
          static_cast<int>(sel.selection_size()),
          cfg.norm.divisor_exponent(cfg.model)};
    }
  }
  throw parameter_error("unknown target kind");
}

}  // namespace detail

inline ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                       unsigned threads = 0) {
  validate(cfg);
  const unsigned n_threads = resolve_thread_count(threads);

  // Shared immutable per-size state, built up front so an infeasible scheme
  // aborts before any sampling.
  std::vector<std::unique_ptr<Selector>> selectors;
  std::vector<EnvironmentShape> shapes;
  std::vector<TargetLaw> targets;
  std::vector<Normalization> norms;
  for (int size : cfg.sizes) {
    try {
      selectors.push_back(std::make_unique<Selector>(cfg.scheme.at(size)));
    } catch (const infeasible_scheme_error& e) {
      throw infeasible_scheme_error("size " + std::to_string(size) + ": " +
                                    e.what());
    }
    const Selector& sel = *selectors.back();
    shapes.push_back(EnvironmentShape::for_selector(sel));
    targets.push_back(detail::build_target(cfg, sel, size));
    norms.push_back(cfg.norm.at(sel.selection_size(), cfg.model));
  }
  const std::vector<TestFunction> bl_bank = bl_test_bank();

  const std::size_t n_tasks =
      cfg.sizes.size() * static_cast<std::size_t>(cfg.n_env);
  std::vector<std::vector<double>> task_values(n_tasks);
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto worker = [&]() {
    for (;;) {
      const std::size_t task = next.fetch_add(1);
      if (task >= n_tasks) return;
      try {
        const std::size_t size_idx =
            task / static_cast<std::size_t>(cfg.n_env);
        const int rep = static_cast<int>(
            task % static_cast<std::size_t>(cfg.n_env));
        const int size = cfg.sizes[size_idx];
        const Selector& sel = *selectors[size_idx];

        rng::Stream env_stream = rng::substream(
            cfg.seed, {1, static_cast<std::uint64_t>(size),
                       static_cast<std::uint64_t>(rep)});
        const WeightVector w =
            sample_environment(cfg.model, shapes[size_idx], env_stream);

        rng::Stream sel_stream = rng::substream(
            cfg.seed, {2, static_cast<std::uint64_t>(size),
                       static_cast<std::uint64_t>(rep)});
        const EmpiricalDistribution mu = sample_quenched_measure(
            w, sel, norms[size_idx], cfg.n_sel, sel_stream);

        std::vector<double> values;
        values.reserve(cfg.metrics.size());
        for (Metric metric : cfg.metrics) {
          switch (metric) {
            case Metric::w1:
              values.push_back(w1_distance(mu, targets[size_idx]));
              break;
            case Metric::ks:
              values.push_back(ks_distance(mu, targets[size_idx]));
              break;
            case Metric::bl:
              values.push_back(
                  bl_distance_lower_bound(mu, targets[size_idx], bl_bank));
              break;
            case Metric::cf:
              values.push_back(cf_distance(
                  mu, std::get<StableFiniteNTarget>(targets[size_idx]),
                  cfg.cf_grid));
              break;
          }
        }
        task_values[task] = std::move(values);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (unsigned k = 0; k < n_threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  ExperimentResult result;
  result.sizes = cfg.sizes;
  result.metrics = cfg.metrics;
  result.n_env = cfg.n_env;
  result.epsilon = cfg.epsilon;
  result.rows.reserve(n_tasks * cfg.metrics.size());
  for (std::size_t task = 0; task < n_tasks; ++task) {
    const std::size_t size_idx = task / static_cast<std::size_t>(cfg.n_env);
    const int rep = static_cast<int>(task % static_cast<std::size_t>(cfg.n_env));
    for (std::size_t mi = 0; mi < cfg.metrics.size(); ++mi)
      result.rows.push_back({cfg.sizes[size_idx], rep, cfg.metrics[mi],
                             task_values[task][mi]});
  }

  for (int size : cfg.sizes)
    for (Metric metric : cfg.metrics) {
      std::vector<double> vals;
      vals.reserve(static_cast<std::size_t>(cfg.n_env));
      for (const auto& row : result.rows)
        if (row.size == size && row.metric == metric) vals.push_back(row.value);
      std::sort(vals.begin(), vals.end());
      double above = 0;
      for (double v : vals)
        if (v > cfg.epsilon) ++above;
      result.summaries.push_back({size, metric,
                                  stats::quantile_sorted(vals, 0.5),
                                  stats::quantile_sorted(vals, 0.1),
                                  stats::quantile_sorted(vals, 0.9),
                                  above / static_cast<double>(vals.size())});
    }
  for (Metric metric : cfg.metrics)
    result.rate_fits.push_back({metric, rate_fit(result, metric)});
  return result;
}

// ---------------------------------------------------------------------------
// Writers
// ---------------------------------------------------------------------------

namespace detail {
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}
}  // namespace detail

inline void write_rows_csv(const ExperimentResult& result, std::ostream& out) {
  out << "N,rep,metric,value\n";
  for (const auto& row : result.rows)
    out << row.size << ',' << row.rep << ',' << to_string(row.metric) << ','
        << detail::format_double(row.value) << '\n';
}

inline void write_rows_json(const ExperimentResult& result, std::ostream& out) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : result.rows)
    rows.push_back({{"N", row.size},
                    {"rep", row.rep},
                    {"metric", to_string(row.metric)},
                    {"value", row.value}});
  out << nlohmann::json{{"rows", rows}}.dump(2) << '\n';
}

inline nlohmann::json summary_json(const ExperimentResult& result) {
  nlohmann::json per_size = nlohmann::json::array();
  for (const auto& s : result.summaries)
    per_size.push_back({{"N", s.size},
                        {"metric", to_string(s.metric)},
                        {"median", s.median},
                        {"q10", s.q10},
                        {"q90", s.q90},
                        {"tail_fraction", s.tail_fraction}});
  nlohmann::json rates = nlohmann::json::array();
  for (const auto& r : result.rate_fits)
    rates.push_back({{"metric", to_string(r.metric)},
                     {"slope", r.fit.slope},
                     {"stderr", r.fit.slope_stderr},
                     {"degenerate", r.fit.degenerate}});
  return {{"epsilon", result.epsilon},
          {"n_env", result.n_env},
          {"per_size", per_size},
          {"rate_fits", rates}};
}

// Writes the row file to `path` (per the configured format) and the summary
// to `path`.summary.json.
inline void save_result(const ExperimentResult& result, const std::string& path,
                        ExperimentConfig::Format format) {
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    if (format == ExperimentConfig::Format::csv)
      write_rows_csv(result, out);
    else
      write_rows_json(result, out);
    if (!out) throw std::runtime_error("write failed: " + path);
  }
  const std::string summary_path = path + ".summary.json";
  std::ofstream out(summary_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + summary_path);
  out << summary_json(result).dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + summary_path);
}

}  // namespace quench::harness
