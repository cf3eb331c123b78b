#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mfilgn/matrix.hpp"

namespace mfilgn {

/// Per-dimension min-max scaling to [-1, 1]. Dimensions that are constant
/// over the training set map to 0.
struct FeatureScaler {
  std::vector<double> min;
  std::vector<double> max;

  static FeatureScaler fit(const Matrix& features);
  std::size_t dim() const noexcept { return min.size(); }
  std::vector<double> apply(std::span<const double> x) const;
  Matrix apply(const Matrix& features) const;
};

/// Epsilon-SVR hyperparameters. `gamma <= 0` selects 1 / feature_dim.
struct SvrParams {
  double c = 1024.0;
  double gamma = 0.0;
  double epsilon = 0.1;
  double tolerance = 1e-3;
  std::int64_t max_iterations = 1'000'000;

  double resolved_gamma(std::size_t feature_dim) const {
    return gamma > 0.0 ? gamma : 1.0 / static_cast<double>(feature_dim);
  }
};

/// Trained RBF epsilon-SVR: f(x) = sum_i coef_i k(sv_i, scale(x)) + bias with
/// k(a, b) = exp(-gamma |a - b|^2). Support vectors are stored scaled.
struct RegressionModel {
  static constexpr int kFormatVersion = 1;

  Matrix support_vectors;
  std::vector<double> dual_coefficients;
  double bias = 0.0;
  double kernel_gamma = 0.0;
  double cost_c = 0.0;
  double epsilon_tube = 0.0;
  FeatureScaler scaler;

  std::size_t feature_dim() const noexcept { return scaler.dim(); }
  /// Throws ValidationError when fields disagree on dimensions or when a
  /// coefficient exceeds the box constraint.
  void validate() const;
};

struct TrainResult {
  RegressionModel model;
  std::int64_t iterations = 0;
  /// Maximal KKT violation (up/low gradient gap) at exit.
  double kkt_gap = 0.0;
  /// False when the iteration cap was hit before the gap met the tolerance.
  bool converged = false;
};

double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma);

/// Fits the scaler and solves the epsilon-insensitive dual with SMO
/// (maximal-violating-pair working set, lowest index on ties).
TrainResult train_svr(const Matrix& features, std::span<const double> scores,
                      const SvrParams& params = {});

double predict(const RegressionModel& model, std::span<const double> features);
std::vector<double> predict(const RegressionModel& model, const Matrix& features);

struct GridSearchOptions {
  int log2_c_min = -1;
  int log2_c_max = 12;
  int log2_gamma_min = -10;
  int log2_gamma_max = 2;
  int folds = 5;
  std::uint64_t seed = 1;
};

struct GridSearchResult {
  SvrParams best;
  double best_cv_mse = 0.0;
};

/// k-fold cross-validated log2 grid over (C, gamma), minimizing mean squared
/// error. Uses only the rows it is given.
GridSearchResult grid_search_svr(const Matrix& features, std::span<const double> scores,
                                 const SvrParams& base = {}, const GridSearchOptions& options = {});

/// Versioned line-oriented text, numbers at 17 significant digits.
void save_model(const RegressionModel& model, std::ostream& out);
std::string save_model(const RegressionModel& model);
RegressionModel load_model(std::istream& in);
RegressionModel load_model_string(const std::string& text);

}  // namespace mfilgn
