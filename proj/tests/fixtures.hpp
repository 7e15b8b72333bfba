#pragma once

#include "tiltsmooth/sample.hpp"

#include <algorithm>
#include <random>
#include <vector>

namespace fixtures {

inline const std::vector<double> x5{-1.0, -0.3, 0.2, 0.9, 1.6};
inline const std::vector<double> y5{0.5, 1.2, -0.4, 2.0, 1.1};

inline const std::vector<double> x10{0.05, 0.13, 0.22, 0.31, 0.45,
                                     0.52, 0.64, 0.71, 0.85, 0.97};
inline const std::vector<double> y10{0.31, 0.92, 1.05, 0.88, 0.29,
                                     -0.12, -0.79, -1.02, -0.71, -0.15};

/// Random design on [lo, hi] with standard normal responses.
inline tiltsmooth::Sample random_sample(std::mt19937_64& rng, std::size_t n, double lo = 0.0,
                                        double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::normal_distribution<double> z;
  std::vector<double> x(n), y(n);
  for (auto& v : x)
    v = u(rng);
  for (auto& v : y)
    v = z(rng);
  return tiltsmooth::Sample(std::move(x), std::move(y));
}

inline std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  out.back() = b;
  return out;
}

} // namespace fixtures
