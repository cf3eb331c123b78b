#include "mfilgn/distribution_fit.hpp"

#include <cmath>
#include <vector>

#include <fmt/format.h>

#include "mfilgn/errors.hpp"
#include "mfilgn/special_functions.hpp"

namespace mfilgn {
namespace {

struct ShapeGrid {
  std::vector<double> shapes;
  std::vector<double> ratios;
};

const ShapeGrid& shape_grid() {
  static const ShapeGrid grid = [] {
    ShapeGrid g;
    const auto count = static_cast<std::size_t>(
        std::llround((kShapeGridMax - kShapeGridMin) / kShapeGridStep)) + 1;
    g.shapes.resize(count);
    g.ratios.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      g.shapes[i] = kShapeGridMin + static_cast<double>(i) * kShapeGridStep;
      g.ratios[i] = ggd_moment_ratio(g.shapes[i]);
    }
    return g;
  }();
  return grid;
}

void check_samples(std::span<const double> samples) {
  if (samples.size() < kMinFitSamples) {
    throw ValidationError(
        fmt::format("distribution fit needs at least {} samples, got {}", kMinFitSamples,
                    samples.size()));
  }
  for (double v : samples) {
    if (!std::isfinite(v)) throw ValidationError("non-finite sample in distribution fit");
  }
}

}  // namespace

double match_ggd_shape(double ratio) {
  const auto& grid = shape_grid();
  std::size_t best = 0;
  double best_diff = std::abs(grid.ratios[0] - ratio);
  for (std::size_t i = 1; i < grid.ratios.size(); ++i) {
    const double diff = std::abs(grid.ratios[i] - ratio);
    if (diff < best_diff) {
      best_diff = diff;
      best = i;
    }
  }
  return grid.shapes[best];
}

GgdParams fit_ggd(std::span<const double> samples) {
  check_samples(samples);
  double abs_sum = 0.0;
  double sq_sum = 0.0;
  for (double v : samples) {
    abs_sum += std::abs(v);
    sq_sum += v * v;
  }
  if (sq_sum == 0.0) throw NumericalError("GGD fit on all-zero samples");
  const double n = static_cast<double>(samples.size());
  const double mean_abs = abs_sum / n;
  const double second_moment = sq_sum / n;
  return {match_ggd_shape(mean_abs * mean_abs / second_moment), second_moment};
}

AggdParams fit_aggd(std::span<const double> samples) {
  check_samples(samples);
  double left_sq = 0.0;
  double right_sq = 0.0;
  double abs_sum = 0.0;
  std::size_t left_count = 0;
  std::size_t right_count = 0;
  for (double v : samples) {
    if (v < 0.0) {
      left_sq += v * v;
      abs_sum -= v;
      ++left_count;
    } else if (v > 0.0) {
      right_sq += v * v;
      abs_sum += v;
      ++right_count;
    }
  }
  if (left_count == 0 || right_count == 0) {
    throw ValidationError("AGGD fit needs samples on both sides of zero");
  }
  const double n = static_cast<double>(samples.size());
  const double left_sigma = std::sqrt(left_sq / static_cast<double>(left_count));
  const double right_sigma = std::sqrt(right_sq / static_cast<double>(right_count));
  const double gamma_hat = left_sigma / right_sigma;
  const double mean_abs = abs_sum / n;
  const double r_hat = mean_abs * mean_abs / ((left_sq + right_sq) / n);
  const double g2 = gamma_hat * gamma_hat;
  const double r_norm = r_hat * (g2 * gamma_hat + 1.0) * (gamma_hat + 1.0) / ((g2 + 1.0) * (g2 + 1.0));

  AggdParams out;
  out.shape_tau = match_ggd_shape(r_norm);
  out.left_sigma2 = left_sigma * left_sigma;
  out.right_sigma2 = right_sigma * right_sigma;

  const double tau = out.shape_tau;
  const double lg1 = log_gamma_fn(1.0 / tau);
  const double lg2 = log_gamma_fn(2.0 / tau);
  const double lg3 = log_gamma_fn(3.0 / tau);
  const double scale = std::exp(0.5 * (lg1 - lg3));  // sqrt(G(1/t) / G(3/t))
  const double nu_left = left_sigma * scale;
  const double nu_right = right_sigma * scale;
  out.mean_eta = (nu_right - nu_left) * std::exp(lg2 - lg1);
  return out;
}

}  // namespace mfilgn
