#pragma once

#include "tiltsmooth/bandwidth.hpp"
#include "tiltsmooth/simulate.hpp"
#include "tiltsmooth/smoothers.hpp"
#include "tiltsmooth/tilting.hpp"

#include <optional>
#include <vector>

namespace tiltsmooth {

/// One estimator fitted with its bandwidth protocol: CV for NW/LL, the
/// flat-top rule of thumb for IO, and the full tilting fit (comparator at
/// the rule-of-thumb bandwidth, seed at the CV bandwidth) for tilted kinds.
class EstimatorFit {
public:
  EstimatorFit(const Sample& s, EstimatorSpec spec, Kernel kernel,
               OptimizerConfig opt = {}, std::optional<double> h_override = std::nullopt)
      : spec_(spec), kernel_(kernel), sample_(s) {
    if (spec.base == SmootherKind::io) {
      h_ = h_override ? *h_override : select_h_rot_io(s);
      smoother_.emplace(SmootherKind::io, Kernel::trapezoidal(), h_, s);
      return;
    }
    std::optional<CvResult> cv;
    if (!h_override)
      cv = select_h_cv(s, spec.base, kernel, default_h_grid(s, opt.h_grid_size), opt.threads);
    double h_seed = h_override ? *h_override : cv->h_star;
    if (!spec.tilted()) {
      h_ = h_seed;
      smoother_.emplace(spec.base, kernel, h_, s);
      return;
    }
    if (cv)
      h_seed = tilt_seed_bandwidth(s, spec.base, kernel, *cv, opt.grid_points);
    comparator_.emplace(SmootherKind::io, Kernel::trapezoidal(), select_h_rot_io(s), s);
    opt.seed_h = h_seed;
    tilt_ = fit_tilted(s, spec.base, kernel, spec.nodes, *comparator_, opt);
    h_ = tilt_->params.h;
  }

  const EstimatorSpec& spec() const noexcept { return spec_; }
  double bandwidth() const noexcept { return h_; }
  const std::optional<TiltFit>& tilt() const noexcept { return tilt_; }
  const std::optional<FittedSmoother>& comparator() const noexcept { return comparator_; }

  std::vector<double> predict(std::span<const double> xs) const {
    if (tilt_)
      return tilted_predict(sample_, spec_.base, kernel_, tilt_->params, xs);
    return smoother_->predict(xs);
  }

  /// (1/n) Σ (Y_i - r̂(X_i))^2 on the fitting sample.
  double in_sample_mse() const {
    const auto fit = predict(sample_.x());
    double s = 0.0;
    for (std::size_t i = 0; i < fit.size(); ++i) {
      const double r = sample_.y()[i] - fit[i];
      s += r * r;
    }
    return s / static_cast<double>(fit.size());
  }

private:
  EstimatorSpec spec_;
  Kernel kernel_;
  Sample sample_;
  double h_ = 0.0;
  std::optional<FittedSmoother> smoother_;
  std::optional<FittedSmoother> comparator_;
  std::optional<TiltFit> tilt_;
};

} // namespace tiltsmooth
