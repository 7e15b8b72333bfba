#pragma once

#include "tiltsmooth/errors.hpp"
#include "tiltsmooth/quadrature.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <string_view>

namespace tiltsmooth {

enum class KernelKind { gaussian, epanechnikov, trapezoidal };

/// Below this |x| the trapezoidal kernel is evaluated from its Taylor series.
inline constexpr double trapezoid_series_switch = 1e-3;

namespace detail {

inline double trapezoid_series(double x) {
  // 2(cos(x/2) - cos x) / x^2 expanded to x^6
  const double x2 = x * x;
  const double poly =
      0.75 + x2 * (-5.0 / 64.0 + x2 * (7.0 / 2560.0 - x2 * (255.0 / 5160960.0)));
  return poly / std::numbers::pi;
}

inline double trapezoid_direct(double x) {
  // cos(x/2) - cos(x) = 2 sin(3x/4) sin(x/4); the product has no cancellation
  return 4.0 * std::sin(0.75 * x) * std::sin(0.25 * x) /
         (std::numbers::pi * x * x);
}

} // namespace detail

/// Second-order (Gaussian, Epanechnikov) or infinite-order flat-top
/// (trapezoidal) smoothing kernel. Trivially copyable value type.
class Kernel {
public:
  constexpr Kernel() = default;
  constexpr explicit Kernel(KernelKind kind) : kind_(kind) {}

  static constexpr Kernel gaussian() { return Kernel(KernelKind::gaussian); }
  static constexpr Kernel epanechnikov() { return Kernel(KernelKind::epanechnikov); }
  static constexpr Kernel trapezoidal() { return Kernel(KernelKind::trapezoidal); }

  constexpr KernelKind kind() const noexcept { return kind_; }

  /// True when K vanishes outside [-1, 1].
  constexpr bool compact() const noexcept {
    return kind_ == KernelKind::epanechnikov;
  }

  constexpr bool nonnegative() const noexcept {
    return kind_ != KernelKind::trapezoidal;
  }

  /// K(x) without the finiteness check; for hot loops with validated input.
  double unchecked(double x) const noexcept {
    switch (kind_) {
    case KernelKind::gaussian:
      return std::exp(-0.5 * x * x) * (0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2);
    case KernelKind::epanechnikov: {
      const double u = 1.0 - x * x;
      return u > 0.0 ? 0.75 * u : 0.0;
    }
    case KernelKind::trapezoidal:
      return std::abs(x) < trapezoid_series_switch ? detail::trapezoid_series(x)
                                                   : detail::trapezoid_direct(x);
    }
    return 0.0;
  }

  double operator()(double x) const {
    if (!std::isfinite(x))
      throw DomainError("kernel argument is not finite");
    return unchecked(x);
  }

  friend constexpr bool operator==(Kernel, Kernel) = default;

private:
  KernelKind kind_ = KernelKind::gaussian;
};

inline double eval_kernel(Kernel k, double x) { return k(x); }

inline std::string_view to_string(KernelKind k) {
  switch (k) {
  case KernelKind::gaussian:
    return "gaussian";
  case KernelKind::epanechnikov:
    return "epanechnikov";
  case KernelKind::trapezoidal:
    return "trapezoidal";
  }
  return "?";
}

inline Kernel parse_kernel(std::string_view name) {
  if (name == "gaussian")
    return Kernel::gaussian();
  if (name == "epanechnikov")
    return Kernel::epanechnikov();
  if (name == "trapezoidal" || name == "trapezoid")
    return Kernel::trapezoidal();
  throw DomainError("unknown kernel '" + std::string(name) + "'");
}

/// Fourier transform λ(s) of a flat-top kernel. Only the trapezoid is
/// provided: λ = 1 on |s| <= 1/2, 2(1 - |s|) on (1/2, 1], 0 beyond.
struct FourierProfile {
  double flat_radius = 0.5;

  static constexpr FourierProfile trapezoid() { return FourierProfile{0.5}; }

  double operator()(double s) const {
    if (!std::isfinite(s))
      throw DomainError("frequency is not finite");
    const double a = std::abs(s);
    if (a <= flat_radius)
      return 1.0;
    if (a <= 1.0)
      return (1.0 - a) / (1.0 - flat_radius);
    return 0.0;
  }
};

inline double eval_fourier(const FourierProfile& profile, double s) {
  return profile(s);
}

namespace detail {

/// Re ∫_A^∞ e^{i a x} x^{-k} dx by the integration-by-parts asymptotic series.
inline double oscillatory_tail(double a, double A, int k, int terms = 10) {
  const std::complex<double> ia(0.0, a);
  const std::complex<double> phase = std::exp(ia * A);
  std::complex<double> sum = 0.0;
  std::complex<double> coeff = 1.0;
  for (int j = 0; j < terms; ++j) {
    // term_j = -e^{iaA} * coeff / (ia * A^{k+j})
    sum += -phase * coeff / (ia * std::pow(A, k + j));
    coeff *= static_cast<double>(k + j) / ia;
  }
  return sum.real();
}

/// ∫_A^∞ of the trapezoidal kernel raised to `power` (1 or 2).
inline double trapezoid_tail(double A, int power) {
  using std::numbers::pi;
  if (power == 1)
    return 2.0 / pi * (oscillatory_tail(0.5, A, 2) - oscillatory_tail(1.0, A, 2));
  // (cos(x/2) - cos x)^2 = 1 + cos(x)/2 + cos(2x)/2 - cos(x/2) - cos(3x/2)
  const double t = 1.0 / (3.0 * A * A * A) + 0.5 * oscillatory_tail(1.0, A, 4) +
                   0.5 * oscillatory_tail(2.0, A, 4) - oscillatory_tail(0.5, A, 4) -
                   oscillatory_tail(1.5, A, 4);
  return 4.0 / (pi * pi) * t;
}

inline double kernel_moment_integral(Kernel k, int power) {
  auto f = [&](double x) {
    const double v = k.unchecked(x);
    return power == 1 ? v : v * v;
  };
  switch (k.kind()) {
  case KernelKind::gaussian:
    return 2.0 * simpson(f, 0.0, 12.0, 4000);
  case KernelKind::epanechnikov:
    return 2.0 * simpson(f, 0.0, 1.0, 2000);
  case KernelKind::trapezoidal: {
    constexpr double A = 200.0;
    return 2.0 * (simpson(f, 0.0, A, 80000) + trapezoid_tail(A, power));
  }
  }
  return 0.0;
}

} // namespace detail

/// Numerical ∫K over the real line.
inline double kernel_integral(Kernel k) { return detail::kernel_moment_integral(k, 1); }

/// Numerical ∫K² over the real line.
inline double kernel_l2_norm(Kernel k) { return detail::kernel_moment_integral(k, 2); }

} // namespace tiltsmooth
