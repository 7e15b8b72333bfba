#pragma once

#include "tiltsmooth/bandwidth.hpp"
#include "tiltsmooth/errors.hpp"
#include "tiltsmooth/kernels.hpp"
#include "tiltsmooth/nelder_mead.hpp"
#include "tiltsmooth/parallel.hpp"
#include "tiltsmooth/quadrature.hpp"
#include "tiltsmooth/sample.hpp"
#include "tiltsmooth/smoothers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace tiltsmooth {

/// θ = (h, tilt). The n-vector p is interpolated from `node_values` placed
/// at `node_positions` (see expand_p).
struct TiltParams {
  double h = 1.0;
  std::vector<double> node_values;
  std::vector<double> node_positions;

  void validate() const {
    detail::require_bandwidth(h);
    if (node_values.size() != node_positions.size())
      throw DomainError("tilt node values and positions differ in length");
    if (node_values.size() < 2)
      throw DomainError("tilt needs at least 2 nodes");
    bool any_positive = false;
    for (std::size_t j = 0; j < node_values.size(); ++j) {
      if (!(node_values[j] >= 0.0) || !std::isfinite(node_values[j]))
        throw DomainError("tilt node values must be finite and nonnegative");
      any_positive |= node_values[j] > 0.0;
      if (j > 0 && !(node_positions[j] > node_positions[j - 1]))
        throw DomainError("tilt node positions must be strictly increasing");
    }
    if (!any_positive)
      throw ZeroTilt();
  }
};

/// m equally spaced quantiles of X, first and last at min X and max X.
/// Falls back to equally spaced positions when ties make the quantiles
/// collide.
inline std::vector<double> quantile_nodes(const Sample& s, std::size_t m) {
  if (m < 2)
    throw DomainError("tilt needs at least 2 nodes");
  std::vector<double> sorted(s.x().begin(), s.x().end());
  std::sort(sorted.begin(), sorted.end());
  const double n1 = static_cast<double>(sorted.size() - 1);
  std::vector<double> pos(m);
  for (std::size_t j = 0; j < m; ++j) {
    const double q = n1 * static_cast<double>(j) / static_cast<double>(m - 1);
    const auto lo = static_cast<std::size_t>(std::floor(q));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = q - static_cast<double>(lo);
    pos[j] = sorted[lo] + frac * (sorted[hi] - sorted[lo]);
  }
  pos.front() = sorted.front();
  pos.back() = sorted.back();
  if (std::adjacent_find(pos.begin(), pos.end(),
                         [](double a, double b) { return !(b > a); }) != pos.end()) {
    const double a = sorted.front(), b = sorted.back();
    if (!(b > a))
      throw DegenerateDesign("all design points are equal");
    for (std::size_t j = 0; j < m; ++j)
      pos[j] = a + (b - a) * static_cast<double>(j) / static_cast<double>(m - 1);
    pos.back() = b;
  }
  return pos;
}

/// Uniform tilt at bandwidth h with m quantile nodes.
inline TiltParams uniform_tilt(const Sample& s, double h, std::size_t m) {
  return TiltParams{h, std::vector<double>(m, 1.0 / static_cast<double>(m)),
                    quantile_nodes(s, m)};
}

namespace detail {

/// raw_i = (1 - w_i) v[j_i] + w_i v[j_i + 1], clamped outside the node span.
struct NodeInterpolation {
  std::vector<std::size_t> left;
  std::vector<double> frac;

  NodeInterpolation(std::span<const double> positions, std::span<const double> xs)
      : left(xs.size()), frac(xs.size()) {
    const std::size_t m = positions.size();
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double x = xs[i];
      if (x <= positions.front()) {
        left[i] = 0;
        frac[i] = 0.0;
      } else if (x >= positions.back()) {
        left[i] = m - 2;
        frac[i] = 1.0;
      } else {
        const auto it = std::upper_bound(positions.begin(), positions.end(), x);
        const auto j = static_cast<std::size_t>(it - positions.begin()) - 1;
        left[i] = j;
        frac[i] = (x - positions[j]) / (positions[j + 1] - positions[j]);
      }
    }
  }

  double raw(std::size_t i, std::span<const double> values) const {
    return (1.0 - frac[i]) * values[left[i]] + frac[i] * values[left[i] + 1];
  }
};

} // namespace detail

/// Probability vector p over the observations: node values interpolated
/// piecewise-linearly at each X_i (constant beyond the end nodes) and
/// normalized to sum to one.
inline std::vector<double> expand_p(const TiltParams& t, const Sample& s) {
  t.validate();
  const detail::NodeInterpolation interp(t.node_positions, s.x());
  std::vector<double> p(s.size());
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::max(0.0, interp.raw(i, t.node_values));
    total += p[i];
  }
  if (!(total > 0.0))
    throw ZeroTilt();
  for (auto& v : p)
    v /= total;
  return p;
}

/// r̂(x) = Σ (n p_i) l_i(x) Y_i with base-smoother weights l at bandwidth t.h.
/// Scaling by n makes uniform p reproduce the base smoother.
inline std::vector<double> tilted_predict(const Sample& s, SmootherKind base_kind,
                                          Kernel kernel, const TiltParams& t,
                                          std::span<const double> xs) {
  const auto p = expand_p(t, s);
  const double n = static_cast<double>(s.size());
  std::vector<double> coef(s.size());
  for (std::size_t i = 0; i < s.size(); ++i)
    coef[i] = n * p[i] * s.y()[i];
  std::vector<double> w(s.size());
  std::vector<double> out(xs.size());
  for (std::size_t g = 0; g < xs.size(); ++g) {
    weights_into(base_kind, s.x(), kernel, t.h, xs[g], w);
    double v = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i)
      v += w[i] * coef[i];
    out[g] = v;
  }
  return out;
}

inline constexpr std::size_t default_objective_grid_points = 201;

/// True when the base smoother at bandwidth h has well-defined weights at
/// every point of `xs`.
inline bool feasible_at(const Sample& s, SmootherKind kind, Kernel kernel, double h,
                        std::span<const double> xs) {
  std::vector<double> w(s.size());
  try {
    for (double x : xs)
      weights_into(kind, s.x(), kernel, h, x, w);
  } catch (const Error&) {
    return false;
  }
  return true;
}

/// CV bandwidth, or the smallest larger grid bandwidth with a finite score
/// at which the base smoother is defined on the whole eval interval.
inline double tilt_seed_bandwidth(const Sample& s, SmootherKind kind, Kernel kernel,
                                  const CvResult& cv,
                                  std::size_t grid_points = default_objective_grid_points) {
  const auto pts = trapezoid_grid(s.eval_interval(), grid_points).points;
  for (std::size_t i = cv.index; i < cv.h_grid.size(); ++i)
    if (std::isfinite(cv.scores[i]) && feasible_at(s, kind, kernel, cv.h_grid[i], pts))
      return cv.h_grid[i];
  return cv.h_star;
}

/// L2 distance target: a fixed flat-top comparator sampled on a trapezoid
/// quadrature grid over an interval.
class TiltObjective {
public:
  TiltObjective(FittedSmoother comparator, SmootherKind base_kind, Interval interval,
                std::size_t grid_points = default_objective_grid_points)
      : comparator_(std::move(comparator)), base_kind_(base_kind),
        grid_(trapezoid_grid(interval, grid_points)) {
    comparator_values_.resize(grid_.size());
    std::vector<double> w(comparator_.sample().size());
    for (std::size_t g = 0; g < grid_.size(); ++g) {
      try {
        comparator_values_[g] = comparator_.predict(grid_.points[g]);
      } catch (const Error& e) {
        throw ObjectiveInfeasible(grid_.points[g], e.what());
      }
    }
  }

  const FittedSmoother& comparator() const noexcept { return comparator_; }
  SmootherKind base_kind() const noexcept { return base_kind_; }
  const QuadratureGrid& grid() const noexcept { return grid_; }
  std::span<const double> comparator_values() const noexcept { return comparator_values_; }

  /// sqrt(Σ_g w_g (f_g - r̆_g)^2) for values f on the grid.
  double distance(std::span<const double> values) const {
    double acc = 0.0;
    for (std::size_t g = 0; g < grid_.size(); ++g) {
      const double d = values[g] - comparator_values_[g];
      acc += grid_.weights[g] * d * d;
    }
    return std::sqrt(acc);
  }

private:
  FittedSmoother comparator_;
  SmootherKind base_kind_;
  QuadratureGrid grid_;
  std::vector<double> comparator_values_;
};

/// ‖r̂(·|θ) - r̆‖ over the objective's interval.
inline double objective(const Sample& s, const TiltObjective& obj, Kernel kernel,
                        const TiltParams& t) {
  const auto& pts = obj.grid().points;
  std::vector<double> values(pts.size());
  const auto p = expand_p(t, s);
  const double n = static_cast<double>(s.size());
  std::vector<double> w(s.size());
  for (std::size_t g = 0; g < pts.size(); ++g) {
    try {
      weights_into(obj.base_kind(), s.x(), kernel, t.h, pts[g], w);
    } catch (const Error& e) {
      throw ObjectiveInfeasible(pts[g], e.what());
    }
    double v = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i)
      v += w[i] * n * p[i] * s.y()[i];
    values[g] = v;
  }
  return obj.distance(values);
}

namespace detail {

/// Objective at fixed h as a function of the raw node values: the tilted
/// fit on the grid is n (C v) / (s · v), with C and s precomputed once.
class FixedBandwidthObjective {
public:
  FixedBandwidthObjective(const Sample& s, const TiltObjective& obj, Kernel kernel,
                          double h, std::span<const double> node_positions)
      : obj_(&obj), m_(node_positions.size()), n_(static_cast<double>(s.size())) {
    const NodeInterpolation interp(node_positions, s.x());
    const auto& pts = obj.grid().points;
    coef_.assign(pts.size() * m_, 0.0);
    col_sum_.assign(m_, 0.0);
    for (std::size_t i = 0; i < s.size(); ++i) {
      col_sum_[interp.left[i]] += 1.0 - interp.frac[i];
      col_sum_[interp.left[i] + 1] += interp.frac[i];
    }
    std::vector<double> w(s.size());
    for (std::size_t g = 0; g < pts.size(); ++g) {
      try {
        weights_into(obj.base_kind(), s.x(), kernel, h, pts[g], w);
      } catch (const Error& e) {
        throw ObjectiveInfeasible(pts[g], e.what());
      }
      double* row = coef_.data() + g * m_;
      for (std::size_t i = 0; i < s.size(); ++i) {
        const double ly = w[i] * s.y()[i];
        row[interp.left[i]] += (1.0 - interp.frac[i]) * ly;
        row[interp.left[i] + 1] += interp.frac[i] * ly;
      }
    }
    fit_.resize(pts.size());
  }

  double operator()(std::span<const double> v) {
    double total = 0.0;
    for (std::size_t j = 0; j < m_; ++j)
      total += col_sum_[j] * v[j];
    if (!(total > 0.0))
      return std::numeric_limits<double>::infinity();
    const double scale = n_ / total;
    for (std::size_t g = 0; g < fit_.size(); ++g) {
      const double* row = coef_.data() + g * m_;
      double acc = 0.0;
      for (std::size_t j = 0; j < m_; ++j)
        acc += row[j] * v[j];
      fit_[g] = scale * acc;
    }
    return obj_->distance(fit_);
  }

private:
  const TiltObjective* obj_;
  std::size_t m_;
  double n_;
  std::vector<double> coef_;
  std::vector<double> col_sum_;
  std::vector<double> fit_;
};

inline double softplus(double z) {
  return z > 30.0 ? z : std::log1p(std::exp(z));
}

} // namespace detail

struct OptimizerConfig {
  /// Polytope budget for each candidate bandwidth.
  std::size_t max_evaluations = 500;
  std::size_t h_grid_size = 40;
  /// Relative objective spread at which the polytope search stops.
  double tolerance = 1e-8;
  std::size_t grid_points = default_objective_grid_points;
  /// Starting bandwidth; when empty, the CV bandwidth of the base smoother
  /// (see tilt_seed_bandwidth).
  std::optional<double> seed_h;
  unsigned threads = 1;
};

struct TiltFit {
  TiltParams params;             ///< node values normalized to sum to 1
  double objective = 0.0;        ///< achieved ‖r̂ - r̆‖
  double seed_objective = 0.0;   ///< uniform tilt at the seed bandwidth
  double seed_h = 0.0;
  bool budget_exhausted = false; ///< chosen search hit max_evaluations
  std::size_t evaluations = 0;
};

/// Minimizes ‖r̂(·|h, p) - r̆‖ jointly over h and the node values. Every
/// bandwidth on the default grid (plus the seed) gets a polytope search over
/// softplus-transformed node values started from the uniform tilt; the best
/// pair wins. Never returns worse than the uniform tilt at the seed h.
inline TiltFit fit_tilted(const Sample& s, SmootherKind base_kind, Kernel kernel,
                          std::size_t m, const FittedSmoother& comparator,
                          const OptimizerConfig& config = {}) {
  if (m < 2)
    throw DomainError("tilt needs at least 2 nodes");
  if (base_kind == SmootherKind::io)
    throw DomainError("tilting applies to nw or ll base smoothers");
  const TiltObjective obj(comparator, base_kind, s.eval_interval(), config.grid_points);

  const double seed_h =
      config.seed_h ? *config.seed_h
                    : tilt_seed_bandwidth(s, base_kind, kernel,
                                          select_h_cv(s, base_kind, kernel,
                                                      default_h_grid(s, config.h_grid_size)),
                                          config.grid_points);
  const auto positions = quantile_nodes(s, m);
  const TiltParams seed{seed_h, std::vector<double>(m, 1.0 / static_cast<double>(m)),
                        positions};
  double seed_value = 0.0;
  try {
    seed_value = objective(s, obj, kernel, seed);
  } catch (const ObjectiveInfeasible& e) {
    throw OptimizerFailed(std::string("infeasible start: ") + e.what());
  }

  std::vector<double> hs = default_h_grid(s, config.h_grid_size);
  hs.push_back(seed_h);
  std::sort(hs.begin(), hs.end());
  hs.erase(std::unique(hs.begin(), hs.end()), hs.end());

  struct Candidate {
    bool feasible = false;
    NelderMeadResult nm;
  };
  std::vector<Candidate> cand(hs.size());
  NelderMeadOptions nm_opt;
  nm_opt.max_evaluations = config.max_evaluations;
  nm_opt.tolerance = config.tolerance;
  nm_opt.initial_step = 1.0;

  parallel_for(hs.size(), config.threads, [&](std::size_t k) {
    std::optional<detail::FixedBandwidthObjective> f;
    try {
      f.emplace(s, obj, kernel, hs[k], positions);
    } catch (const ObjectiveInfeasible&) {
      return;
    }
    std::vector<double> v(m);
    auto fz = [&](const std::vector<double>& z) {
      for (std::size_t j = 0; j < m; ++j)
        v[j] = detail::softplus(z[j]);
      return (*f)(v);
    };
    cand[k].nm = nelder_mead(fz, std::vector<double>(m, 0.0), nm_opt);
    cand[k].feasible = true;
  });

  TiltFit fit;
  fit.seed_h = seed_h;
  fit.seed_objective = seed_value;
  fit.params = seed;
  fit.objective = seed_value;
  for (const auto& c : cand)
    fit.evaluations += c.nm.evaluations;

  std::size_t best = hs.size();
  for (std::size_t k = 0; k < hs.size(); ++k)
    if (cand[k].feasible &&
        (best == hs.size() || cand[k].nm.value < cand[best].nm.value))
      best = k;
  if (best == hs.size())
    return fit;

  TiltParams t{hs[best], std::vector<double>(m), positions};
  double total = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    t.node_values[j] = detail::softplus(cand[best].nm.x[j]);
    total += t.node_values[j];
  }
  for (auto& v : t.node_values)
    v /= total;
  double achieved = std::numeric_limits<double>::infinity();
  try {
    achieved = objective(s, obj, kernel, t);
  } catch (const Error&) {
  }
  if (achieved <= seed_value) {
    fit.params = std::move(t);
    fit.objective = achieved;
    fit.budget_exhausted = !cand[best].nm.converged;
  }
  return fit;
}

} // namespace tiltsmooth
