#pragma once

#include "tiltsmooth/errors.hpp"
#include "tiltsmooth/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <span>
#include <vector>

namespace tiltsmooth {

/// Four-parameter logistic f(x) = d + (a - d) / (1 + (x/c)^b), x > 0.
struct FourPL {
  double a = 0.0; ///< response as (x/c)^b -> 0
  double d = 1.0; ///< response as (x/c)^b -> inf
  double c = 1.0; ///< EC50, > 0
  double b = 1.0; ///< slope

  double operator()(double x) const {
    return d + (a - d) / (1.0 + std::pow(x / c, b));
  }

  /// Same curve with d >= a (swap the asymptotes and negate the slope).
  FourPL canonical() const {
    if (a <= d)
      return *this;
    return FourPL{d, a, c, -b};
  }
};

enum class LossKind { squared, huber };

struct Loss {
  LossKind kind = LossKind::squared;
  /// Huber threshold; when empty, 1.345 x normalized MAD of the
  /// least-squares residuals.
  std::optional<double> delta;

  static Loss squared() { return {}; }
  static Loss huber(std::optional<double> delta = std::nullopt) {
    return {LossKind::huber, delta};
  }
};

struct FourPLFit {
  FourPL params;
  double mse = 0.0;   ///< plain mean squared residual of the final curve
  double delta = 0.0; ///< Huber threshold used (0 for squared loss)
  std::size_t evaluations = 0;
};

namespace detail {

inline double huber_rho(double r, double delta) {
  const double a = std::abs(r);
  return a <= delta ? 0.5 * r * r : delta * (a - 0.5 * delta);
}

inline double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

/// Polytope search over (a, d, log c, b), restarted from the incumbent until
/// a restart stops improving.
template <class F>
NelderMeadResult restarted_search(F&& f, std::vector<double> start, std::vector<double> steps) {
  NelderMeadOptions opt;
  opt.max_evaluations = 4000;
  opt.tolerance = 1e-15;
  // nelder_mead uses one step for all axes, so optimize in scaled coordinates
  auto scaled = [&](const std::vector<double>& z) {
    std::vector<double> p(z.size());
    for (std::size_t i = 0; i < z.size(); ++i)
      p[i] = z[i] * steps[i];
    return f(p);
  };
  std::vector<double> z(start.size());
  for (std::size_t i = 0; i < z.size(); ++i)
    z[i] = start[i] / steps[i];
  opt.initial_step = 1.0;
  NelderMeadResult best = nelder_mead(scaled, z, opt);
  std::size_t total = best.evaluations;
  for (int restart = 0; restart < 30; ++restart) {
    opt.initial_step = restart % 2 ? 0.05 : 0.5;
    auto r = nelder_mead(scaled, best.x, opt);
    total += r.evaluations;
    const bool improved = r.value < best.value - 1e-15 * std::abs(best.value);
    if (r.value < best.value)
      best = r;
    if (!improved && restart > 1)
      break;
  }
  best.evaluations = total;
  for (std::size_t i = 0; i < best.x.size(); ++i)
    best.x[i] *= steps[i];
  return best;
}

} // namespace detail

/// Fits the 4PL curve by minimizing Σ ρ(y - f(x)) from the start
/// (a, d, c, b) = (min y, max y, median dose, 1). Huber fits are started
/// from the least-squares solution.
inline FourPLFit fit_4pl_robust(std::span<const double> doses, std::span<const double> responses,
                                Loss loss = Loss::squared()) {
  if (doses.size() != responses.size())
    throw DomainError("dose and response lengths differ");
  for (double x : doses)
    if (!(x > 0.0) || !std::isfinite(x))
      throw DomainError("doses must be positive and finite");
  for (double y : responses)
    if (!std::isfinite(y))
      throw DomainError("responses must be finite");
  if (std::set<double>(doses.begin(), doses.end()).size() < 5)
    throw InsufficientDesign("4PL fit needs at least 5 distinct doses");

  const auto [ymin, ymax] = std::minmax_element(responses.begin(), responses.end());
  const double yrange = *ymax - *ymin;
  const double yscale = yrange > 0.0 ? yrange : std::max(1.0, std::abs(*ymin));
  const std::vector<double> steps{0.1 * yscale, 0.1 * yscale, 0.5, 0.5};

  auto curve = [](const std::vector<double>& p) { return FourPL{p[0], p[1], std::exp(p[2]), p[3]}; };
  auto residual_sum = [&](const std::vector<double>& p, auto&& rho) {
    const FourPL f = curve(p);
    double s = 0.0;
    for (std::size_t i = 0; i < doses.size(); ++i)
      s += rho(responses[i] - f(doses[i]));
    return s;
  };

  std::vector<double> start{*ymin, *ymax,
                            std::log(detail::median_of({doses.begin(), doses.end()})), 1.0};
  auto ls = detail::restarted_search(
      [&](const std::vector<double>& p) {
        return residual_sum(p, [](double r) { return r * r; });
      },
      start, steps);

  FourPLFit fit;
  std::vector<double> best = ls.x;
  fit.evaluations = ls.evaluations;
  if (loss.kind == LossKind::huber) {
    double delta = 0.0;
    if (loss.delta) {
      delta = *loss.delta;
      if (!(delta > 0.0))
        throw DomainError("Huber delta must be positive");
    } else {
      const FourPL f = curve(ls.x);
      std::vector<double> r(doses.size());
      for (std::size_t i = 0; i < r.size(); ++i)
        r[i] = responses[i] - f(doses[i]);
      const double med = detail::median_of(r);
      for (auto& v : r)
        v = std::abs(v - med);
      delta = 1.345 * 1.4826 * detail::median_of(r);
      delta = std::max(delta, 1e-8 * yscale);
    }
    fit.delta = delta;
    auto hub = detail::restarted_search(
        [&](const std::vector<double>& p) {
          return residual_sum(p, [&](double r) { return detail::huber_rho(r, delta); });
        },
        ls.x, steps);
    best = hub.x;
    fit.evaluations += hub.evaluations;
  }

  fit.params = curve(best).canonical();
  double sse = 0.0;
  for (std::size_t i = 0; i < doses.size(); ++i) {
    const double r = responses[i] - fit.params(doses[i]);
    sse += r * r;
  }
  fit.mse = sse / static_cast<double>(doses.size());
  return fit;
}

} // namespace tiltsmooth
