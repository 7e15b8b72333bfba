#pragma once

#include "tiltsmooth/errors.hpp"
#include "tiltsmooth/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace tiltsmooth {

/// Paired observations (X_i, Y_i) plus the interval used for L2 distances.
/// Validated on construction: equal lengths, at least `min_size` points,
/// finite values, a < b.
class Sample {
public:
  static constexpr std::size_t min_size = 2;

  Sample(std::vector<double> x, std::vector<double> y, Interval eval_interval)
      : x_(std::move(x)), y_(std::move(y)), interval_(eval_interval) {
    validate(min_size);
  }

  /// Sample whose eval interval is [min X, max X].
  Sample(std::vector<double> x, std::vector<double> y)
      : x_(std::move(x)), y_(std::move(y)) {
    if (!x_.empty()) {
      const auto [lo, hi] = std::minmax_element(x_.begin(), x_.end());
      interval_ = {*lo, *hi};
    }
    validate(min_size);
  }

  std::span<const double> x() const noexcept { return x_; }
  std::span<const double> y() const noexcept { return y_; }
  const Interval& eval_interval() const noexcept { return interval_; }
  std::size_t size() const noexcept { return x_.size(); }

  double x_min() const { return *std::min_element(x_.begin(), x_.end()); }
  double x_max() const { return *std::max_element(x_.begin(), x_.end()); }

  /// Same design, different responses.
  Sample with_responses(std::vector<double> y) const {
    return Sample(x_, std::move(y), interval_);
  }

private:
  friend Sample leave_one_out(const Sample& s, std::size_t i);
  struct unchecked_tag {};
  Sample(unchecked_tag, std::vector<double> x, std::vector<double> y, Interval iv)
      : x_(std::move(x)), y_(std::move(y)), interval_(iv) {}

  void validate(std::size_t min_n) const {
    if (x_.size() != y_.size())
      throw DomainError("sample x and y lengths differ");
    if (x_.size() < min_n)
      throw DomainError("sample needs at least " + std::to_string(min_n) + " points");
    for (std::size_t i = 0; i < x_.size(); ++i)
      if (!std::isfinite(x_[i]) || !std::isfinite(y_[i]))
        throw DomainError("non-finite value at index " + std::to_string(i));
    if (!(interval_.a < interval_.b) || !std::isfinite(interval_.a) ||
        !std::isfinite(interval_.b))
      throw DomainError("eval interval must satisfy a < b");
  }

  std::vector<double> x_;
  std::vector<double> y_;
  Interval interval_;
};

/// Copy of `s` without observation i. The result may hold a single point.
inline Sample leave_one_out(const Sample& s, std::size_t i) {
  std::vector<double> x, y;
  x.reserve(s.size() - 1);
  y.reserve(s.size() - 1);
  for (std::size_t j = 0; j < s.size(); ++j) {
    if (j == i)
      continue;
    x.push_back(s.x()[j]);
    y.push_back(s.y()[j]);
  }
  return Sample(Sample::unchecked_tag{}, std::move(x), std::move(y), s.eval_interval());
}

} // namespace tiltsmooth
