#pragma once

#include <span>

namespace mfilgn {

/// Zero-mean generalized Gaussian: shape and variance.
struct GgdParams {
  double shape_tau = 0.0;
  double variance_sigma2 = 0.0;
};

/// Zero-mode asymmetric generalized Gaussian. `mean_eta` is the mean of the
/// fitted density, positive when the right tail is wider.
struct AggdParams {
  double shape_tau = 0.0;
  double left_sigma2 = 0.0;
  double right_sigma2 = 0.0;
  double mean_eta = 0.0;
};

/// Shape search grid shared by both estimators: [0.2, 10] in 0.001 steps.
inline constexpr double kShapeGridMin = 0.2;
inline constexpr double kShapeGridMax = 10.0;
inline constexpr double kShapeGridStep = 0.001;
inline constexpr std::size_t kMinFitSamples = 100;

/// Moment-matching GGD fit. Throws ValidationError for fewer than 100 or
/// non-finite samples and NumericalError when every sample is zero.
GgdParams fit_ggd(std::span<const double> samples);

/// Moment-matching AGGD fit. Throws ValidationError for fewer than 100 or
/// non-finite samples, or when either side of zero has no samples.
AggdParams fit_aggd(std::span<const double> samples);

/// Grid shape whose GGD moment ratio is closest to `ratio` (lowest shape on
/// ties).
double match_ggd_shape(double ratio);

}  // namespace mfilgn
