#pragma once

#include "tiltsmooth/errors.hpp"
#include "tiltsmooth/kernels.hpp"
#include "tiltsmooth/parallel.hpp"
#include "tiltsmooth/sample.hpp"
#include "tiltsmooth/smoothers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace tiltsmooth {

/// Bandwidth grid, per-bandwidth CV scores (infinity where infeasible) and
/// the minimizing bandwidth.
struct CvResult {
  std::vector<double> h_grid;
  std::vector<double> scores;
  double h_star = 0.0;
  std::size_t index = 0;
};

/// Leave-one-out outcome for one observation.
struct LooTerm {
  double residual = 0.0;   ///< Y_i - fit_{-i}(X_i), or Y_i when the fit failed
  bool failed = false;
  std::size_t refit_size = 0;
};

/// Refits the smoother without observation i, for every i, and evaluates it
/// at X_i. A failed refit counts as predicting zero.
inline std::vector<LooTerm> loocv_terms(const Sample& s, SmootherKind kind, Kernel kernel,
                                        double h) {
  detail::require_bandwidth(h);
  const std::size_t n = s.size();
  std::vector<LooTerm> terms(n);
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Sample reduced = leave_one_out(s, i);
    auto& t = terms[i];
    t.refit_size = reduced.size();
    const double xi = s.x()[i];
    const double yi = s.y()[i];
    try {
      std::span<double> wi(w.data(), reduced.size());
      weights_into(kind, reduced.x(), kernel, h, xi, wi);
      double fit = 0.0;
      for (std::size_t j = 0; j < reduced.size(); ++j)
        fit += wi[j] * reduced.y()[j];
      t.residual = yi - fit;
    } catch (const EmptyNeighborhood&) {
      t.failed = true;
    } catch (const DegenerateDesign&) {
      t.failed = true;
    } catch (const UnstableDenominator&) {
      t.failed = true;
    }
    if (t.failed)
      t.residual = yi;
  }
  return terms;
}

/// (1/n) Σ (Y_i - fit_{-i}(X_i))^2.
inline double loocv_score(const Sample& s, SmootherKind kind, Kernel kernel, double h) {
  if (s.size() < 3)
    throw DomainError("leave-one-out CV needs at least 3 observations");
  const auto terms = loocv_terms(s, kind, kernel, h);
  double sum = 0.0;
  std::size_t failed = 0;
  for (const auto& t : terms) {
    sum += t.residual * t.residual;
    failed += t.failed;
  }
  if (failed == terms.size())
    throw BandwidthInfeasible("every leave-one-out fit failed at h = " + std::to_string(h));
  return sum / static_cast<double>(terms.size());
}

/// `count` log-spaced bandwidths from 0.1 x (mean spacing of X) to range(X)/2.
inline std::vector<double> default_h_grid(const Sample& s, std::size_t count = 40) {
  const double range = s.x_max() - s.x_min();
  if (!(range > 0.0))
    throw DegenerateDesign("all design points are equal");
  if (count == 0)
    throw DomainError("bandwidth grid must not be empty");
  const double mean_spacing = range / static_cast<double>(s.size() - 1);
  const double lo = 0.1 * mean_spacing;
  const double hi = 0.5 * range;
  std::vector<double> grid(count);
  if (count == 1) {
    grid[0] = hi;
    return grid;
  }
  const double step = std::log(hi / lo) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i)
    grid[i] = lo * std::exp(step * static_cast<double>(i));
  grid.back() = hi;
  return grid;
}

/// Minimizes the leave-one-out score over `grid`; ties go to the smaller h.
inline CvResult select_h_cv(const Sample& s, SmootherKind kind, Kernel kernel,
                            std::vector<double> grid, unsigned threads = 1) {
  if (grid.empty())
    throw DomainError("bandwidth grid must not be empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0))
      throw DomainError("bandwidth grid entries must be positive");
    if (i > 0 && !(grid[i] > grid[i - 1]))
      throw DomainError("bandwidth grid must be strictly increasing");
  }
  CvResult r;
  r.scores.assign(grid.size(), std::numeric_limits<double>::infinity());
  parallel_for(grid.size(), threads, [&](std::size_t i) {
    try {
      r.scores[i] = loocv_score(s, kind, kernel, grid[i]);
    } catch (const BandwidthInfeasible&) {
    }
  });
  std::size_t best = grid.size();
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (std::isfinite(r.scores[i]) && (best == grid.size() || r.scores[i] < r.scores[best]))
      best = i;
  if (best == grid.size())
    throw BandwidthInfeasible("no feasible bandwidth on the CV grid");
  r.h_grid = std::move(grid);
  r.index = best;
  r.h_star = r.h_grid[best];
  return r;
}

inline CvResult select_h_cv(const Sample& s, SmootherKind kind, Kernel kernel,
                            unsigned threads = 1) {
  return select_h_cv(s, kind, kernel, default_h_grid(s), threads);
}

/// Normalized trigonometric coefficient magnitudes ρ(1..T) of Y regressed on
/// X mapped affinely to [0, 2π]: ρ(t) = |c_t| / sqrt(2 var(Y)). T is half the
/// number of distinct design points; on a lattice higher frequencies alias.
inline std::vector<double> trig_coefficient_profile(const Sample& s) {
  const std::size_t n = s.size();
  const double lo = s.x_min();
  const double range = s.x_max() - lo;
  if (!(range > 0.0))
    throw DegenerateDesign("all design points are equal");
  const auto y = s.y();
  double mean = 0.0;
  for (double v : y)
    mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : y)
    var += (v - mean) * (v - mean);
  var /= static_cast<double>(n);

  std::vector<double> support(s.x().begin(), s.x().end());
  std::sort(support.begin(), support.end());
  const auto distinct =
      static_cast<std::size_t>(std::unique(support.begin(), support.end()) - support.begin());
  const std::size_t T = (distinct + 1) / 2;
  std::vector<double> rho(T, 0.0);
  if (!(var > 0.0))
    return rho;
  const double norm = std::sqrt(2.0 * var);
  std::vector<double> u(n);
  for (std::size_t i = 0; i < n; ++i)
    u[i] = 2.0 * std::numbers::pi * (s.x()[i] - lo) / range;
  for (std::size_t t = 1; t <= T; ++t) {
    double a = 0.0, b = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double yc = y[i] - mean;
      a += yc * std::cos(static_cast<double>(t) * u[i]);
      b += yc * std::sin(static_cast<double>(t) * u[i]);
    }
    a *= 2.0 / static_cast<double>(n);
    b *= 2.0 / static_cast<double>(n);
    rho[t - 1] = std::hypot(a, b) / norm;
  }
  return rho;
}

/// Flat-top rule of thumb: t* is the first frequency followed by five
/// consecutive normalized coefficients below 2 sqrt(log10(n) / n). The
/// trapezoid's flat band |s| <= 1/2 then covers the angular frequency
/// 2π t* / range(X), i.e. h = range(X) / (4π t*).
inline double select_h_rot_io(const Sample& s) {
  const std::size_t n = s.size();
  if (n < 8)
    throw InsufficientDesign("flat-top rule of thumb needs at least 8 observations");
  const auto rho = trig_coefficient_profile(s);
  const double threshold =
      2.0 * std::sqrt(std::log10(static_cast<double>(n)) / static_cast<double>(n));
  constexpr std::size_t run = 5;
  const std::size_t T = rho.size();
  std::size_t t_star = T;
  for (std::size_t t = 1; t + run - 1 <= T; ++t) {
    bool below = true;
    for (std::size_t j = 0; j < run && below; ++j)
      below = rho[t - 1 + j] < threshold;
    if (below) {
      t_star = t;
      break;
    }
  }
  const double range = s.x_max() - s.x_min();
  return range / (4.0 * std::numbers::pi * static_cast<double>(t_star));
}

} // namespace tiltsmooth
