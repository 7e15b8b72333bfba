#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

namespace tiltsmooth {

struct NelderMeadOptions {
  std::size_t max_evaluations = 500;
  /// Stop when (f_worst - f_best) <= tolerance * (|f_best| + tiny).
  double tolerance = 1e-8;
  /// Edge length of the initial simplex along each axis.
  double initial_step = 0.5;
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = std::numeric_limits<double>::infinity();
  std::size_t evaluations = 0;
  bool converged = false;
};

/// Derivative-free polytope search. The start point is always evaluated
/// first, so the returned value never exceeds f(start). Non-finite objective
/// values are treated as +inf.
template <class F>
NelderMeadResult nelder_mead(F&& f, std::vector<double> start,
                             const NelderMeadOptions& opt = {}) {
  const std::size_t dim = start.size();
  NelderMeadResult best;
  auto eval = [&](const std::vector<double>& x) {
    double v = f(x);
    if (!std::isfinite(v))
      v = std::numeric_limits<double>::infinity();
    ++best.evaluations;
    if (v < best.value) {
      best.value = v;
      best.x = x;
    }
    return v;
  };
  auto budget_left = [&] { return best.evaluations < opt.max_evaluations; };

  std::vector<std::vector<double>> pts(dim + 1, start);
  std::vector<double> vals(dim + 1);
  vals[0] = eval(start);
  for (std::size_t i = 0; i < dim && budget_left(); ++i) {
    pts[i + 1][i] += opt.initial_step;
    vals[i + 1] = eval(pts[i + 1]);
  }
  if (dim == 0 || !budget_left()) {
    best.converged = dim == 0;
    return best;
  }

  std::vector<std::size_t> order(dim + 1);
  std::vector<double> centroid(dim), trial(dim), trial2(dim);
  constexpr double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;

  while (budget_left()) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    const std::size_t lo = order.front(), hi = order.back(), second = order[dim - 1];
    const double spread = vals[hi] - vals[lo];
    if (std::isfinite(spread) && spread <= opt.tolerance * (std::abs(vals[lo]) + 1e-300)) {
      best.converged = true;
      break;
    }

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t k = 0; k <= dim; ++k)
      if (k != hi)
        for (std::size_t j = 0; j < dim; ++j)
          centroid[j] += pts[k][j];
    for (auto& c : centroid)
      c /= static_cast<double>(dim);

    for (std::size_t j = 0; j < dim; ++j)
      trial[j] = centroid[j] + alpha * (centroid[j] - pts[hi][j]);
    const double fr = eval(trial);

    if (fr < vals[lo]) {
      if (!budget_left()) {
        pts[hi] = trial;
        vals[hi] = fr;
        break;
      }
      for (std::size_t j = 0; j < dim; ++j)
        trial2[j] = centroid[j] + gamma * (trial[j] - centroid[j]);
      const double fe = eval(trial2);
      if (fe < fr) {
        pts[hi] = trial2;
        vals[hi] = fe;
      } else {
        pts[hi] = trial;
        vals[hi] = fr;
      }
      continue;
    }
    if (fr < vals[second]) {
      pts[hi] = trial;
      vals[hi] = fr;
      continue;
    }
    if (!budget_left())
      break;
    // contraction, outside or inside
    const bool outside = fr < vals[hi];
    for (std::size_t j = 0; j < dim; ++j)
      trial2[j] = outside ? centroid[j] + rho * (trial[j] - centroid[j])
                          : centroid[j] + rho * (pts[hi][j] - centroid[j]);
    const double fc = eval(trial2);
    if (fc < (outside ? fr : vals[hi])) {
      pts[hi] = trial2;
      vals[hi] = fc;
      continue;
    }
    // shrink toward the best vertex
    for (std::size_t k = 0; k <= dim && budget_left(); ++k) {
      if (k == lo)
        continue;
      for (std::size_t j = 0; j < dim; ++j)
        pts[k][j] = pts[lo][j] + sigma * (pts[k][j] - pts[lo][j]);
      vals[k] = eval(pts[k]);
    }
  }
  return best;
}

} // namespace tiltsmooth
