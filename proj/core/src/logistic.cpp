#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "mfilgn/errors.hpp"
#include "mfilgn/evaluation.hpp"

namespace mfilgn {
namespace {

constexpr int kMaxIterations = 500;

// 1 / (1 + exp(z)) without overflow.
double inverse_one_plus_exp(double z) {
  if (z > 0.0) {
    const double e = std::exp(-z);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(z));
}

double evaluate(const std::array<double, 5>& b, double x) {
  return b[0] * (0.5 - inverse_one_plus_exp(b[1] * (x - b[2]))) + b[3] * x + b[4];
}

double sum_squares(const std::array<double, 5>& b, std::span<const double> x,
                   std::span<const double> y) {
  double sse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = evaluate(b, x[i]) - y[i];
    sse += r * r;
  }
  return sse;
}

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stddev_of(std::span<const double> v) {
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size()));
}

LogisticFit levenberg_marquardt(std::array<double, 5> beta, std::span<const double> x,
                                std::span<const double> y) {
  const auto n = static_cast<Eigen::Index>(x.size());
  LogisticFit fit;
  double sse = sum_squares(beta, x, y);
  double lambda = 1e-3;
  const double y_scale = std::max(1.0, *std::max_element(y.begin(), y.end()) -
                                           *std::min_element(y.begin(), y.end()));
  const double sse_floor = 1e-28 * y_scale * y_scale * static_cast<double>(x.size());

  Eigen::MatrixXd jac(n, 5);
  Eigen::VectorXd resid(n);
  int it = 0;
  for (; it < kMaxIterations; ++it) {
    if (sse <= sse_floor) {
      fit.converged = true;
      break;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      resid[i] = evaluate(beta, x[static_cast<std::size_t>(i)]) - y[static_cast<std::size_t>(i)];
    }
    for (int k = 0; k < 5; ++k) {
      const double h = 1e-6 * std::max(1.0, std::abs(beta[static_cast<std::size_t>(k)]));
      auto plus = beta;
      auto minus = beta;
      plus[static_cast<std::size_t>(k)] += h;
      minus[static_cast<std::size_t>(k)] -= h;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double xi = x[static_cast<std::size_t>(i)];
        jac(i, k) = (evaluate(plus, xi) - evaluate(minus, xi)) / (2.0 * h);
      }
    }
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd jtr = jac.transpose() * resid;
    const double diag_floor = 1e-12 * (1.0 + jtj.diagonal().maxCoeff());

    bool improved = false;
    while (lambda < 1e16) {
      Eigen::MatrixXd a = jtj;
      for (int k = 0; k < 5; ++k) a(k, k) += lambda * std::max(jtj(k, k), diag_floor);
      const Eigen::VectorXd step = a.ldlt().solve(-jtr);
      if (!step.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      auto candidate = beta;
      for (int k = 0; k < 5; ++k) candidate[static_cast<std::size_t>(k)] += step[k];
      const double candidate_sse = sum_squares(candidate, x, y);
      if (std::isfinite(candidate_sse) && candidate_sse < sse) {
        const double rel_gain = (sse - candidate_sse) / std::max(sse, std::numeric_limits<double>::min());
        beta = candidate;
        sse = candidate_sse;
        lambda = std::max(lambda / 10.0, 1e-12);
        improved = true;
        if (rel_gain < 1e-12) fit.converged = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!improved) {
      // No descent direction left at any damping: a stationary point.
      fit.converged = true;
      break;
    }
    if (fit.converged) break;
  }
  fit.params.beta = beta;
  fit.sse = sse;
  fit.iterations = it;
  return fit;
}

}  // namespace

double LogisticParams::operator()(double x) const { return evaluate(beta, x); }

std::vector<double> LogisticParams::apply(std::span<const double> x) const {
  std::vector<double> out(x.size());
  std::transform(x.begin(), x.end(), out.begin(), [this](double v) { return (*this)(v); });
  return out;
}

LogisticFit fit_logistic(std::span<const double> raw, std::span<const double> mos) {
  if (raw.size() != mos.size()) throw ValidationError("logistic fit: length mismatch");
  if (raw.size() < 5) throw ValidationError("logistic fit needs at least 5 samples");
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!std::isfinite(raw[i]) || !std::isfinite(mos[i])) {
      throw ValidationError("logistic fit: non-finite input");
    }
  }

  const double raw_mean = mean_of(raw);
  const double raw_std = stddev_of(raw);
  const double mos_mean = mean_of(mos);
  if (raw_std == 0.0) {
    LogisticFit flat;
    flat.params.beta = {0.0, 0.0, raw_mean, 0.0, mos_mean};
    flat.sse = sum_squares(flat.params.beta, raw, mos);
    flat.converged = true;
    flat.degenerate = true;
    return flat;
  }

  const auto [mos_lo, mos_hi] = std::minmax_element(mos.begin(), mos.end());
  const std::array<double, 5> sigmoid_start = {*mos_hi - *mos_lo, 1.0 / raw_std, raw_mean, 0.0,
                                               mos_mean};
  // Second start from the least-squares line; covers near-linear data where
  // the sigmoid start drifts along a flat valley.
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    sxy += (raw[i] - raw_mean) * (mos[i] - mos_mean);
    sxx += (raw[i] - raw_mean) * (raw[i] - raw_mean);
  }
  const double slope = sxy / sxx;
  const std::array<double, 5> linear_start = {0.0, 1.0 / raw_std, raw_mean, slope,
                                              mos_mean - slope * raw_mean};

  LogisticFit best = levenberg_marquardt(sigmoid_start, raw, mos);
  LogisticFit alt = levenberg_marquardt(linear_start, raw, mos);
  if (alt.sse < best.sse) best = alt;
  return best;
}

}  // namespace mfilgn
