#pragma once

#include "tiltsmooth/errors.hpp"
#include "tiltsmooth/kernels.hpp"
#include "tiltsmooth/sample.hpp"

#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tiltsmooth {

/// Nadaraya-Watson, local linear, or the flat-top (infinite order) comparator.
enum class SmootherKind { nw, ll, io };

inline std::string_view to_string(SmootherKind k) {
  switch (k) {
  case SmootherKind::nw:
    return "nw";
  case SmootherKind::ll:
    return "ll";
  case SmootherKind::io:
    return "io";
  }
  return "?";
}

/// Relative threshold on S0*S2 - S1^2 below which the local linear fit is
/// declared degenerate.
inline constexpr double ll_degeneracy_tol = 1e-12;
/// |Σ K_trap| below this times n is rejected for the flat-top smoother.
inline constexpr double io_denominator_tol = 1e-10;

namespace detail {

inline void require_bandwidth(double h) {
  if (!(h > 0.0) || !std::isfinite(h))
    throw DomainError("bandwidth must be positive and finite");
}

inline void require_query(double x) {
  if (!std::isfinite(x))
    throw DomainError("query point is not finite");
}

inline void check_compact_range(std::span<const double> xs, Kernel k, double h,
                                double x) {
  if (!k.compact() || xs.empty())
    return;
  double lo = xs[0], hi = xs[0];
  for (double v : xs) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (x < lo - h || x > hi + h)
    throw EmptyNeighborhood(x);
}

} // namespace detail

/// Nadaraya-Watson weights K((X_i - x)/h) / Σ_j K((X_j - x)/h) written to `out`.
inline void nw_weights_into(std::span<const double> xs, Kernel k, double h, double x,
                            std::span<double> out) {
  detail::require_bandwidth(h);
  detail::require_query(x);
  detail::check_compact_range(xs, k, h, x);
  double den = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    out[i] = k.unchecked((xs[i] - x) / h);
    den += out[i];
  }
  if (!(den > 0.0))
    throw EmptyNeighborhood(x);
  for (std::size_t i = 0; i < xs.size(); ++i)
    out[i] /= den;
}

/// Local linear weights b_i / Σ b_j with
/// b_i = K_i (S_2 - (X_i - x) S_1), S_j = Σ K_i (X_i - x)^j.
/// Offsets are scaled by h, which leaves the ratio unchanged.
inline void ll_weights_into(std::span<const double> xs, Kernel k, double h, double x,
                            std::span<double> out) {
  detail::require_bandwidth(h);
  detail::require_query(x);
  detail::check_compact_range(xs, k, h, x);
  double s0 = 0.0, s1 = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double u = (xs[i] - x) / h;
    const double kv = k.unchecked(u);
    out[i] = kv;
    s0 += kv;
    s1 += kv * u;
    s2 += kv * u * u;
  }
  if (!(s0 > 0.0))
    throw EmptyNeighborhood(x);
  const double den = s0 * s2 - s1 * s1;
  if (!(std::abs(den) > ll_degeneracy_tol * s0 * s2))
    throw DegenerateDesign("local linear denominator vanishes", x);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double u = (xs[i] - x) / h;
    out[i] = out[i] * (s2 - u * s1) / den;
  }
}

/// NW-form weights with the trapezoidal flat-top kernel. Individual weights
/// may be negative.
inline void io_weights_into(std::span<const double> xs, double h, double x,
                            std::span<double> out) {
  detail::require_bandwidth(h);
  detail::require_query(x);
  constexpr Kernel k = Kernel::trapezoidal();
  double den = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    out[i] = k.unchecked((xs[i] - x) / h);
    den += out[i];
  }
  if (!(std::abs(den) >= io_denominator_tol * static_cast<double>(xs.size())))
    throw UnstableDenominator(x, den);
  for (std::size_t i = 0; i < xs.size(); ++i)
    out[i] /= den;
}

/// Dispatch on kind; `k` is ignored for the flat-top smoother.
inline void weights_into(SmootherKind kind, std::span<const double> xs, Kernel k,
                         double h, double x, std::span<double> out) {
  switch (kind) {
  case SmootherKind::nw:
    nw_weights_into(xs, k, h, x, out);
    return;
  case SmootherKind::ll:
    ll_weights_into(xs, k, h, x, out);
    return;
  case SmootherKind::io:
    io_weights_into(xs, h, x, out);
    return;
  }
}

inline std::vector<double> nw_weights(std::span<const double> xs, Kernel k, double h,
                                      double x) {
  std::vector<double> w(xs.size());
  nw_weights_into(xs, k, h, x, w);
  return w;
}

inline std::vector<double> nw_weights(const Sample& s, Kernel k, double h, double x) {
  return nw_weights(s.x(), k, h, x);
}

inline std::vector<double> ll_weights(std::span<const double> xs, Kernel k, double h,
                                      double x) {
  std::vector<double> w(xs.size());
  ll_weights_into(xs, k, h, x, w);
  return w;
}

inline std::vector<double> ll_weights(const Sample& s, Kernel k, double h, double x) {
  return ll_weights(s.x(), k, h, x);
}

inline std::vector<double> io_weights(std::span<const double> xs, double h, double x) {
  std::vector<double> w(xs.size());
  io_weights_into(xs, h, x, w);
  return w;
}

inline std::vector<double> io_weights(const Sample& s, double h, double x) {
  return io_weights(s.x(), h, x);
}

/// Σ |l_i(x)|; equals 1 for nonnegative kernels.
inline double weight_abs_sum(std::span<const double> w) {
  double s = 0.0;
  for (double v : w)
    s += std::abs(v);
  return s;
}

/// Immutable linear smoother bound to a sample: x -> l(x) and x -> <l(x), Y>.
class FittedSmoother {
public:
  FittedSmoother(SmootherKind kind, Kernel kernel, double h, Sample sample)
      : kind_(kind),
        kernel_(kind == SmootherKind::io ? Kernel::trapezoidal() : kernel), h_(h),
        sample_(std::move(sample)) {
    detail::require_bandwidth(h_);
  }

  SmootherKind kind() const noexcept { return kind_; }
  Kernel kernel() const noexcept { return kernel_; }
  double bandwidth() const noexcept { return h_; }
  const Sample& sample() const noexcept { return sample_; }

  std::vector<double> weights(double x) const {
    std::vector<double> w(sample_.size());
    weights_into(kind_, sample_.x(), kernel_, h_, x, w);
    return w;
  }

  double predict(double x) const {
    std::vector<double> w(sample_.size());
    return predict_with(x, w);
  }

  std::vector<double> predict(std::span<const double> xs) const {
    std::vector<double> w(sample_.size());
    std::vector<double> out(xs.size());
    for (std::size_t g = 0; g < xs.size(); ++g)
      out[g] = predict_with(xs[g], w);
    return out;
  }

private:
  double predict_with(double x, std::span<double> w) const {
    weights_into(kind_, sample_.x(), kernel_, h_, x, w);
    const auto y = sample_.y();
    double v = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i)
      v += w[i] * y[i];
    return v;
  }

  SmootherKind kind_;
  Kernel kernel_;
  double h_;
  Sample sample_;
};

inline std::vector<double> predict(const FittedSmoother& f, std::span<const double> xs) {
  return f.predict(xs);
}

} // namespace tiltsmooth
