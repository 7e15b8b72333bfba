#pragma once

#include "tiltsmooth/bandwidth.hpp"
#include "tiltsmooth/errors.hpp"
#include "tiltsmooth/kernels.hpp"
#include "tiltsmooth/parallel.hpp"
#include "tiltsmooth/quadrature.hpp"
#include "tiltsmooth/sample.hpp"
#include "tiltsmooth/smoothers.hpp"
#include "tiltsmooth/tilting.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace tiltsmooth {

// ---------------------------------------------------------------------------
// Scenarios

enum class RegressionFn { exp, sin };
enum class DesignKind { uniform, normal };

/// r1(x) = x + 4 exp(-2x^2)/sqrt(2π).
inline double exp_regression(double x) {
  return x + 4.0 * std::exp(-2.0 * x * x) * (0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2);
}

/// r2(x) = sin(4πx).
inline double sin_regression(double x) { return std::sin(4.0 * std::numbers::pi * x); }

inline double regression_value(RegressionFn fn, double x) {
  return fn == RegressionFn::exp ? exp_regression(x) : sin_regression(x);
}

inline std::string_view to_string(RegressionFn fn) {
  return fn == RegressionFn::exp ? "exp" : "sin";
}

inline std::string_view to_string(DesignKind d) {
  return d == DesignKind::uniform ? "uniform" : "normal";
}

/// Uniform(a, b) or standard normal design density.
struct Design {
  DesignKind kind = DesignKind::uniform;
  double a = 0.0;
  double b = 1.0;

  static Design uniform(double a, double b) { return {DesignKind::uniform, a, b}; }
  static Design normal() { return {DesignKind::normal, 0.0, 1.0}; }
};

/// ISE interval used in the published tables for each regression function.
inline Interval default_ise_interval(RegressionFn fn) {
  return fn == RegressionFn::exp ? Interval{-2.0, 2.0} : Interval{0.0, 1.0};
}

inline Design default_uniform_design(RegressionFn fn) {
  return fn == RegressionFn::exp ? Design::uniform(-2.0, 2.0) : Design::uniform(0.0, 1.0);
}

struct Scenario {
  RegressionFn fn = RegressionFn::exp;
  Design design = Design::normal();
  double sigma = 0.5;
  std::size_t n = 100;
  Interval ise_interval{-2.0, 2.0};

  /// Interval the fitted sample carries (tilting objective domain): the
  /// design support for uniform designs, the ISE interval otherwise.
  Interval fit_interval() const {
    return design.kind == DesignKind::uniform ? Interval{design.a, design.b} : ise_interval;
  }

  double truth(double x) const { return regression_value(fn, x); }

  /// Groups scenarios into one output table, e.g. "exp_normal" or
  /// "sin_uniform_0.15_0.85" for a non-default ISE interval.
  std::string family() const {
    std::string f = std::string(to_string(fn)) + "_" + std::string(to_string(design.kind));
    if (ise_interval != default_ise_interval(fn)) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "_%g_%g", ise_interval.a, ise_interval.b);
      f += buf;
    }
    return f;
  }

  std::string label() const {
    char buf[64];
    std::snprintf(buf, sizeof buf, "_n%zu_s%g", n, sigma);
    return family() + buf;
  }
};

// ---------------------------------------------------------------------------
// Estimators

/// Base smoother plus tilt node count (0 = untilted).
struct EstimatorSpec {
  SmootherKind base = SmootherKind::nw;
  std::size_t nodes = 0;

  bool tilted() const noexcept { return nodes > 0; }

  /// "io", "nw", "ll", "nw-p4", "ll-p10", ...
  std::string name() const {
    std::string s(to_string(base));
    if (tilted())
      s += "-p" + std::to_string(nodes);
    return s;
  }

  friend bool operator==(const EstimatorSpec&, const EstimatorSpec&) = default;
};

/// Accepts "io", "nw", "ll", "nw-p<m>", "ll-p<m>" and "tilted-nw"/"tilted-ll"
/// (the latter take `default_nodes`).
inline EstimatorSpec parse_estimator(std::string_view name, std::size_t default_nodes = 4) {
  auto base_of = [&](std::string_view b) -> SmootherKind {
    if (b == "nw")
      return SmootherKind::nw;
    if (b == "ll")
      return SmootherKind::ll;
    if (b == "io")
      return SmootherKind::io;
    throw DomainError("unknown estimator '" + std::string(name) + "'");
  };
  if (name.starts_with("tilted-")) {
    const auto base = base_of(name.substr(7));
    if (base == SmootherKind::io || default_nodes < 2)
      throw DomainError("unknown estimator '" + std::string(name) + "'");
    return {base, default_nodes};
  }
  const auto dash = name.find("-p");
  if (dash == std::string_view::npos)
    return {base_of(name), 0};
  const auto base = base_of(name.substr(0, dash));
  const auto digits = name.substr(dash + 2);
  std::size_t m = 0;
  if (digits.empty() || digits.find_first_not_of("0123456789") != std::string_view::npos ||
      base == SmootherKind::io || (m = std::stoul(std::string(digits))) < 2)
    throw DomainError("unknown estimator '" + std::string(name) + "'");
  return {base, m};
}

// ---------------------------------------------------------------------------
// Config

struct SimConfig {
  std::vector<Scenario> scenarios;
  std::vector<EstimatorSpec> estimators;
  std::size_t replications = 100;
  std::uint64_t base_seed = 20240101;
  std::size_t grid_points = 201;
  Kernel kernel = Kernel::gaussian();
  std::size_t max_evaluations = 500;
  std::size_t h_grid_size = 40;
  double tolerance = 1e-8;

  void validate() const {
    if (scenarios.empty())
      throw ConfigError("scenarios", "at least one scenario is required");
    if (estimators.empty())
      throw ConfigError("estimators", "at least one estimator is required");
    if (replications < 1)
      throw ConfigError("replications", "must be >= 1");
    if (grid_points < 2)
      throw ConfigError("grid_points", "must be >= 2");
    for (std::size_t i = 0; i < scenarios.size(); ++i) {
      const auto& sc = scenarios[i];
      const std::string p = "scenarios[" + std::to_string(i) + "]";
      if (!(sc.sigma > 0.0) || !std::isfinite(sc.sigma))
        throw ConfigError(p + ".sigma", "must be > 0");
      if (sc.n < 8)
        throw ConfigError(p + ".n", "must be >= 8");
      if (!(sc.ise_interval.a < sc.ise_interval.b))
        throw ConfigError(p + ".ise_interval", "must satisfy a < b");
      if (sc.design.kind == DesignKind::uniform && !(sc.design.a < sc.design.b))
        throw ConfigError(p + ".design", "uniform support must satisfy a < b");
    }
  }
};

namespace detail {

using json = nlohmann::json;

inline const json& require(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object() || !j.contains(key))
    throw ConfigError(path.empty() ? key : path + "." + key, "missing required field");
  return j.at(key);
}

inline double as_number(const json& j, const std::string& path) {
  if (!j.is_number())
    throw ConfigError(path, "expected a number");
  return j.get<double>();
}

inline std::size_t as_count(const json& j, const std::string& path) {
  if (!j.is_number_integer() || j.get<long long>() < 0)
    throw ConfigError(path, "expected a nonnegative integer");
  return j.get<std::size_t>();
}

inline std::vector<double> number_list(const json& j, const std::string& path) {
  std::vector<double> out;
  if (j.is_array()) {
    if (j.empty())
      throw ConfigError(path, "list must not be empty");
    for (std::size_t i = 0; i < j.size(); ++i)
      out.push_back(as_number(j[i], path + "[" + std::to_string(i) + "]"));
  } else {
    out.push_back(as_number(j, path));
  }
  return out;
}

inline Interval interval_of(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2)
    throw ConfigError(path, "expected [a, b]");
  Interval iv{as_number(j[0], path + "[0]"), as_number(j[1], path + "[1]")};
  if (!(iv.a < iv.b))
    throw ConfigError(path, "must satisfy a < b");
  return iv;
}

} // namespace detail

/// Parses a JSON campaign description. Each scenario block may list several
/// `n` and `sigma` values; blocks expand to their full factorial product
/// (n outer, sigma inner).
inline SimConfig parse_sim_config(const nlohmann::json& j) {
  using detail::require;
  if (!j.is_object())
    throw ConfigError("<root>", "expected an object");
  SimConfig cfg;
  if (j.contains("replications")) {
    cfg.replications = detail::as_count(j["replications"], "replications");
    if (cfg.replications < 1)
      throw ConfigError("replications", "must be >= 1");
  }
  if (j.contains("base_seed")) {
    if (!j["base_seed"].is_number_integer())
      throw ConfigError("base_seed", "expected an integer");
    cfg.base_seed = j["base_seed"].get<std::uint64_t>();
  }
  if (j.contains("grid_points"))
    cfg.grid_points = detail::as_count(j["grid_points"], "grid_points");
  if (j.contains("kernel")) {
    if (!j["kernel"].is_string())
      throw ConfigError("kernel", "expected a string");
    try {
      cfg.kernel = parse_kernel(j["kernel"].get<std::string>());
    } catch (const DomainError& e) {
      throw ConfigError("kernel", e.what());
    }
    if (cfg.kernel.kind() == KernelKind::trapezoidal)
      throw ConfigError("kernel", "base smoothers need a second-order kernel");
  }
  if (j.contains("optimizer")) {
    const auto& o = j["optimizer"];
    if (!o.is_object())
      throw ConfigError("optimizer", "expected an object");
    if (o.contains("max_evaluations"))
      cfg.max_evaluations = detail::as_count(o["max_evaluations"], "optimizer.max_evaluations");
    if (o.contains("h_grid_size"))
      cfg.h_grid_size = detail::as_count(o["h_grid_size"], "optimizer.h_grid_size");
    if (o.contains("tolerance"))
      cfg.tolerance = detail::as_number(o["tolerance"], "optimizer.tolerance");
  }

  const auto& est = require(j, "estimators", "");
  if (!est.is_array() || est.empty())
    throw ConfigError("estimators", "expected a nonempty list");
  for (std::size_t i = 0; i < est.size(); ++i) {
    const std::string p = "estimators[" + std::to_string(i) + "]";
    if (!est[i].is_string())
      throw ConfigError(p, "expected a string");
    try {
      cfg.estimators.push_back(parse_estimator(est[i].get<std::string>()));
    } catch (const DomainError& e) {
      throw ConfigError(p, e.what());
    }
  }

  const auto& scs = require(j, "scenarios", "");
  if (!scs.is_array() || scs.empty())
    throw ConfigError("scenarios", "expected a nonempty list");
  for (std::size_t i = 0; i < scs.size(); ++i) {
    const std::string p = "scenarios[" + std::to_string(i) + "]";
    const auto& s = scs[i];
    if (!s.is_object())
      throw ConfigError(p, "expected an object");
    Scenario base;
    const auto& fn = require(s, "function", p);
    if (fn == "exp")
      base.fn = RegressionFn::exp;
    else if (fn == "sin")
      base.fn = RegressionFn::sin;
    else
      throw ConfigError(p + ".function", "expected \"exp\" or \"sin\"");

    const auto& d = require(s, "design", p);
    std::string dtype;
    if (d.is_string())
      dtype = d.get<std::string>();
    else if (d.is_object() && d.contains("type") && d["type"].is_string())
      dtype = d["type"].get<std::string>();
    if (dtype == "normal") {
      base.design = Design::normal();
    } else if (dtype == "uniform") {
      base.design = default_uniform_design(base.fn);
      if (d.is_object() && d.contains("support")) {
        const auto iv = detail::interval_of(d["support"], p + ".design.support");
        base.design = Design::uniform(iv.a, iv.b);
      }
    } else {
      throw ConfigError(p + ".design", "expected \"uniform\" or \"normal\"");
    }

    base.ise_interval = s.contains("ise_interval")
                            ? detail::interval_of(s["ise_interval"], p + ".ise_interval")
                            : default_ise_interval(base.fn);

    const auto ns = detail::number_list(require(s, "n", p), p + ".n");
    const auto sigmas = detail::number_list(require(s, "sigma", p), p + ".sigma");
    for (std::size_t a = 0; a < ns.size(); ++a) {
      const double nv = ns[a];
      const std::string np = s["n"].is_array() ? p + ".n[" + std::to_string(a) + "]" : p + ".n";
      if (!(nv >= 8.0) || nv != std::floor(nv))
        throw ConfigError(np, "must be an integer >= 8");
      for (std::size_t b = 0; b < sigmas.size(); ++b) {
        const std::string sp =
            s["sigma"].is_array() ? p + ".sigma[" + std::to_string(b) + "]" : p + ".sigma";
        if (!(sigmas[b] > 0.0))
          throw ConfigError(sp, "must be > 0");
        Scenario sc = base;
        sc.n = static_cast<std::size_t>(nv);
        sc.sigma = sigmas[b];
        cfg.scenarios.push_back(sc);
      }
    }
  }
  cfg.validate();
  return cfg;
}

inline SimConfig load_sim_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open config file " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("<root>", std::string("invalid JSON: ") + e.what());
  }
  return parse_sim_config(j);
}

/// Resolved config as JSON (for run manifests).
inline nlohmann::json to_json(const SimConfig& cfg) {
  nlohmann::json j;
  j["replications"] = cfg.replications;
  j["base_seed"] = cfg.base_seed;
  j["grid_points"] = cfg.grid_points;
  j["kernel"] = std::string(to_string(cfg.kernel.kind()));
  j["optimizer"] = {{"max_evaluations", cfg.max_evaluations},
                    {"h_grid_size", cfg.h_grid_size},
                    {"tolerance", cfg.tolerance}};
  auto& est = j["estimators"] = nlohmann::json::array();
  for (const auto& e : cfg.estimators)
    est.push_back(e.name());
  auto& scs = j["scenarios"] = nlohmann::json::array();
  for (const auto& sc : cfg.scenarios) {
    nlohmann::json d;
    d["type"] = std::string(to_string(sc.design.kind));
    if (sc.design.kind == DesignKind::uniform)
      d["support"] = {sc.design.a, sc.design.b};
    scs.push_back({{"function", std::string(to_string(sc.fn))},
                   {"design", d},
                   {"n", sc.n},
                   {"sigma", sc.sigma},
                   {"ise_interval", {sc.ise_interval.a, sc.ise_interval.b}}});
  }
  return j;
}

// ---------------------------------------------------------------------------
// Data generation and error measures

/// SplitMix64 finalizer.
inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed for replication k of scenario j.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t scenario,
                              std::uint64_t replication) {
  return splitmix64(splitmix64(splitmix64(base) ^ scenario) ^ replication);
}

/// Y_i = r(X_i) + ε_i with X_i from the design and ε_i ~ N(0, σ²).
/// sigma = 0 gives noiseless responses.
inline Sample gen_sample(const Scenario& sc, std::uint64_t seed) {
  if (!(sc.sigma >= 0.0))
    throw DomainError("sigma must be >= 0");
  std::mt19937_64 rng(seed);
  std::vector<double> x(sc.n), y(sc.n);
  if (sc.design.kind == DesignKind::uniform) {
    std::uniform_real_distribution<double> ux(sc.design.a, sc.design.b);
    for (auto& v : x)
      v = ux(rng);
  } else {
    std::normal_distribution<double> nx(0.0, 1.0);
    for (auto& v : x)
      v = nx(rng);
  }
  std::normal_distribution<double> noise(0.0, 1.0);
  for (std::size_t i = 0; i < sc.n; ++i)
    y[i] = sc.truth(x[i]) + sc.sigma * noise(rng);
  return Sample(std::move(x), std::move(y), sc.fit_interval());
}

/// Trapezoid-rule ∫ (estimate - truth)^2 over `iv` on `grid_points` points.
template <class Estimate, class Truth>
double ise(Estimate&& estimate, Truth&& truth, Interval iv, std::size_t grid_points) {
  const auto g = trapezoid_grid(iv, grid_points);
  double acc = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double d = estimate(g.points[i]) - truth(g.points[i]);
    acc += g.weights[i] * d * d;
  }
  return acc;
}

/// Same as above with the estimate already evaluated on the uniform grid.
template <class Truth>
double ise_on_grid(std::span<const double> estimate, Truth&& truth, Interval iv) {
  const auto g = trapezoid_grid(iv, estimate.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double d = estimate[i] - truth(g.points[i]);
    acc += g.weights[i] * d * d;
  }
  return acc;
}

/// Median of a nonempty vector (mean of the two middle values for even size).
inline double median(std::vector<double> v) {
  if (v.empty())
    return std::numeric_limits<double>::quiet_NaN();
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2)
    return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

// ---------------------------------------------------------------------------
// Campaign

/// Fitted values of every estimator on the ISE grid for one sample, or
/// nullopt where the estimator failed.
inline std::vector<std::optional<std::vector<double>>>
fit_estimators(const Sample& s, const std::vector<EstimatorSpec>& estimators,
               std::span<const double> grid, const SimConfig& cfg) {
  std::vector<std::optional<std::vector<double>>> out(estimators.size());
  auto needs = [&](auto pred) {
    return std::any_of(estimators.begin(), estimators.end(), pred);
  };
  std::optional<FittedSmoother> comparator;
  std::optional<std::optional<CvResult>> cv_nw, cv_ll;
  auto cv_of = [&](SmootherKind k) -> const std::optional<CvResult>& {
    auto& slot = k == SmootherKind::nw ? cv_nw : cv_ll;
    if (!slot) {
      try {
        slot.emplace(select_h_cv(s, k, cfg.kernel, default_h_grid(s, cfg.h_grid_size)));
      } catch (const Error&) {
        slot.emplace(std::nullopt);
      }
    }
    return *slot;
  };
  if (needs([](const EstimatorSpec& e) { return e.base == SmootherKind::io || e.tilted(); })) {
    try {
      comparator.emplace(SmootherKind::io, Kernel::trapezoidal(), select_h_rot_io(s), s);
    } catch (const Error&) {
    }
  }

  OptimizerConfig oc;
  oc.max_evaluations = cfg.max_evaluations;
  oc.h_grid_size = cfg.h_grid_size;
  oc.tolerance = cfg.tolerance;
  oc.grid_points = cfg.grid_points;

  for (std::size_t e = 0; e < estimators.size(); ++e) {
    const auto& spec = estimators[e];
    try {
      if (spec.base == SmootherKind::io) {
        if (comparator)
          out[e] = comparator->predict(grid);
        continue;
      }
      const auto& cv = cv_of(spec.base);
      if (!cv)
        continue;
      if (!spec.tilted()) {
        out[e] = FittedSmoother(spec.base, cfg.kernel, cv->h_star, s).predict(grid);
        continue;
      }
      if (!comparator)
        continue;
      oc.seed_h = tilt_seed_bandwidth(s, spec.base, cfg.kernel, *cv, cfg.grid_points);
      const auto fit = fit_tilted(s, spec.base, cfg.kernel, spec.nodes, *comparator, oc);
      out[e] = tilted_predict(s, spec.base, cfg.kernel, fit.params, grid);
    } catch (const Error&) {
      out[e].reset();
    }
  }
  return out;
}

/// ISEs for one (scenario, estimator) pair across replications.
struct CellResult {
  std::vector<std::optional<double>> ise; ///< nullopt = failed replication
  double mise = std::numeric_limits<double>::quiet_NaN(); ///< median of successes
  double mean = std::numeric_limits<double>::quiet_NaN();
  std::size_t failures = 0;

  /// More than 10% of replications failed.
  bool flagged() const { return failures * 10 > ise.size(); }
};

struct SimResult {
  SimConfig config;
  /// cells[scenario][estimator]
  std::vector<std::vector<CellResult>> cells;
  /// seeds[scenario][replication]
  std::vector<std::vector<std::uint64_t>> seeds;
  double runtime_seconds = 0.0;

  const CellResult& cell(std::size_t scenario, std::size_t estimator) const {
    return cells.at(scenario).at(estimator);
  }
};

inline void summarize(CellResult& c) {
  std::vector<double> ok;
  for (const auto& v : c.ise)
    if (v)
      ok.push_back(*v);
  c.failures = c.ise.size() - ok.size();
  c.mise = median(ok);
  if (!ok.empty()) {
    double s = 0.0;
    for (double v : ok)
      s += v;
    c.mean = s / static_cast<double>(ok.size());
  }
}

/// Runs every scenario x replication x estimator. Work units are
/// (scenario, replication) pairs; results are stored by index, so the
/// thread count never changes any number.
inline SimResult run_campaign(const SimConfig& cfg, unsigned threads = 1) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  SimResult res;
  res.config = cfg;
  const std::size_t S = cfg.scenarios.size(), R = cfg.replications, E = cfg.estimators.size();
  res.cells.assign(S, std::vector<CellResult>(E));
  res.seeds.assign(S, std::vector<std::uint64_t>(R));
  for (auto& row : res.cells)
    for (auto& c : row)
      c.ise.assign(R, std::nullopt);

  std::vector<QuadratureGrid> grids;
  for (const auto& sc : cfg.scenarios)
    grids.push_back(trapezoid_grid(sc.ise_interval, cfg.grid_points));

  parallel_for(S * R, threads, [&](std::size_t unit) {
    const std::size_t j = unit / R, k = unit % R;
    const auto& sc = cfg.scenarios[j];
    const std::uint64_t seed = mix_seed(cfg.base_seed, j, k);
    res.seeds[j][k] = seed;
    const Sample s = gen_sample(sc, seed);
    const auto fits = fit_estimators(s, cfg.estimators, grids[j].points, cfg);
    for (std::size_t e = 0; e < E; ++e)
      if (fits[e])
        res.cells[j][e].ise[k] =
            ise_on_grid(*fits[e], [&](double x) { return sc.truth(x); }, sc.ise_interval);
  });

  for (auto& row : res.cells)
    for (auto& c : row)
      summarize(c);
  res.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

// ---------------------------------------------------------------------------
// Output

namespace detail {

inline std::string fmt6(double v) {
  if (std::isnan(v))
    return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline std::string fmt_full(double v) {
  if (std::isnan(v))
    return "NA";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::ofstream open_output(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out)
    throw IoError("cannot write " + p.string());
  return out;
}

} // namespace detail

/// Index of the smallest non-NaN value (first on ties), or npos.
inline std::size_t argmin_finite(std::span<const double> v) {
  std::size_t best = static_cast<std::size_t>(-1);
  for (std::size_t i = 0; i < v.size(); ++i)
    if (!std::isnan(v[i]) && (best == static_cast<std::size_t>(-1) || v[i] < v[best]))
      best = i;
  return best;
}

/// Writes mise_<family>.csv per scenario family, ise_raw.csv and
/// failures.csv into `dir`. Returns the written paths.
inline std::vector<std::filesystem::path> emit_tables(const SimResult& res,
                                                      const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (res.cells.empty())
    throw DomainError("empty simulation result");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
    throw IoError("cannot create output directory " + dir.string());
  const auto& cfg = res.config;
  std::vector<fs::path> written;

  std::map<std::string, std::vector<std::size_t>> families;
  std::vector<std::string> order;
  for (std::size_t j = 0; j < cfg.scenarios.size(); ++j) {
    const auto f = cfg.scenarios[j].family();
    if (!families.contains(f))
      order.push_back(f);
    families[f].push_back(j);
  }

  for (const auto& fam : order) {
    auto idx = families[fam];
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      const auto &sa = cfg.scenarios[a], &sb = cfg.scenarios[b];
      return sa.n != sb.n ? sa.n < sb.n : sa.sigma < sb.sigma;
    });
    const auto path = dir / ("mise_" + fam + ".csv");
    auto out = detail::open_output(path);
    out << "n,sigma";
    for (const auto& e : cfg.estimators)
      out << ',' << e.name();
    out << ",min_estimator";
    for (const auto& e : cfg.estimators)
      out << ',' << e.name() << "_mean";
    out << '\n';
    for (std::size_t j : idx) {
      const auto& sc = cfg.scenarios[j];
      std::vector<double> mise;
      for (const auto& c : res.cells[j])
        mise.push_back(c.mise);
      const auto best = argmin_finite(mise);
      out << sc.n << ',' << detail::fmt6(sc.sigma);
      for (double v : mise)
        out << ',' << detail::fmt6(v);
      out << ',' << (best < mise.size() ? cfg.estimators[best].name() : "NA");
      for (const auto& c : res.cells[j])
        out << ',' << detail::fmt6(c.mean);
      out << '\n';
    }
    written.push_back(path);
  }

  {
    const auto path = dir / "ise_raw.csv";
    auto out = detail::open_output(path);
    out << "scenario,estimator,replication,ise\n";
    for (std::size_t j = 0; j < cfg.scenarios.size(); ++j)
      for (std::size_t e = 0; e < cfg.estimators.size(); ++e)
        for (std::size_t k = 0; k < cfg.replications; ++k) {
          const auto& v = res.cells[j][e].ise[k];
          out << cfg.scenarios[j].label() << ',' << cfg.estimators[e].name() << ',' << k << ','
              << (v ? detail::fmt_full(*v) : "NA") << '\n';
        }
    written.push_back(path);
  }
  {
    const auto path = dir / "failures.csv";
    auto out = detail::open_output(path);
    out << "scenario,estimator,failed,replications,flagged\n";
    for (std::size_t j = 0; j < cfg.scenarios.size(); ++j)
      for (std::size_t e = 0; e < cfg.estimators.size(); ++e) {
        const auto& c = res.cells[j][e];
        out << cfg.scenarios[j].label() << ',' << cfg.estimators[e].name() << ',' << c.failures
            << ',' << cfg.replications << ',' << (c.flagged() ? 1 : 0) << '\n';
      }
    written.push_back(path);
  }
  return written;
}

} // namespace tiltsmooth
