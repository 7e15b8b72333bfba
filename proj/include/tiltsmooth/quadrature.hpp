#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace tiltsmooth {

/// Closed interval [a, b] with a < b.
struct Interval {
  double a = 0.0;
  double b = 1.0;

  double length() const noexcept { return b - a; }
  bool contains(double x) const noexcept { return x >= a && x <= b; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Uniform grid on an interval with composite trapezoid weights.
/// The weights sum to the interval length.
struct QuadratureGrid {
  std::vector<double> points;
  std::vector<double> weights;

  std::size_t size() const noexcept { return points.size(); }
};

inline QuadratureGrid trapezoid_grid(Interval iv, std::size_t n_points) {
  if (n_points < 2)
    throw std::invalid_argument("quadrature grid needs at least 2 points");
  if (!(iv.a < iv.b))
    throw std::invalid_argument("quadrature interval must satisfy a < b");
  QuadratureGrid g;
  g.points.resize(n_points);
  g.weights.assign(n_points, 0.0);
  const double step = iv.length() / static_cast<double>(n_points - 1);
  for (std::size_t i = 0; i < n_points; ++i)
    g.points[i] = iv.a + step * static_cast<double>(i);
  // exact endpoint, no accumulated drift
  g.points.back() = iv.b;
  for (std::size_t i = 0; i + 1 < n_points; ++i) {
    const double w = 0.5 * (g.points[i + 1] - g.points[i]);
    g.weights[i] += w;
    g.weights[i + 1] += w;
  }
  return g;
}

/// Σ w_g f_g.
inline double integrate(std::span<const double> weights,
                        std::span<const double> values) {
  if (weights.size() != values.size())
    throw std::invalid_argument("weights/values length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i)
    s += weights[i] * values[i];
  return s;
}

/// Composite Simpson rule with `intervals` (rounded up to even) panels.
template <class F>
double simpson(F&& f, double a, double b, std::size_t intervals) {
  if (intervals % 2)
    ++intervals;
  const double h = (b - a) / static_cast<double>(intervals);
  double odd = 0.0, even = 0.0;
  for (std::size_t i = 1; i < intervals; ++i) {
    const double v = f(a + h * static_cast<double>(i));
    (i % 2 ? odd : even) += v;
  }
  return h / 3.0 * (f(a) + f(b) + 4.0 * odd + 2.0 * even);
}

} // namespace tiltsmooth
