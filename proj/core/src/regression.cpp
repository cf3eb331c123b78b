#include "mfilgn/regression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include <fmt/format.h>

#include "mfilgn/errors.hpp"
#include "mfilgn/random.hpp"

namespace mfilgn {

FeatureScaler FeatureScaler::fit(const Matrix& features) {
  if (features.rows == 0) throw ValidationError("cannot fit a scaler on zero rows");
  FeatureScaler s;
  s.min.assign(features.cols, std::numeric_limits<double>::infinity());
  s.max.assign(features.cols, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < features.rows; ++i) {
    const auto r = features.row(i);
    for (std::size_t j = 0; j < features.cols; ++j) {
      s.min[j] = std::min(s.min[j], r[j]);
      s.max[j] = std::max(s.max[j], r[j]);
    }
  }
  return s;
}

std::vector<double> FeatureScaler::apply(std::span<const double> x) const {
  if (x.size() != dim()) {
    throw ValidationError(fmt::format("feature length {} does not match scaler dimension {}",
                                      x.size(), dim()));
  }
  std::vector<double> out(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double span = max[j] - min[j];
    out[j] = span > 0.0 ? 2.0 * (x[j] - min[j]) / span - 1.0 : 0.0;
  }
  return out;
}

Matrix FeatureScaler::apply(const Matrix& features) const {
  Matrix out(features.rows, features.cols);
  for (std::size_t i = 0; i < features.rows; ++i) {
    const auto scaled = apply(features.row(i));
    std::copy(scaled.begin(), scaled.end(), out.row(i).begin());
  }
  return out;
}

void RegressionModel::validate() const {
  if (scaler.min.size() != scaler.max.size()) {
    throw ValidationError("scaler_min and scaler_max lengths differ");
  }
  if (support_vectors.rows != dual_coefficients.size()) {
    throw ValidationError("support vector count does not match coefficient count");
  }
  if (support_vectors.rows > 0 && support_vectors.cols != feature_dim()) {
    throw ValidationError(fmt::format("support vector width {} does not match feature_dim {}",
                                      support_vectors.cols, feature_dim()));
  }
  if (!(kernel_gamma > 0.0)) throw ValidationError("kernel gamma must be positive");
  if (!(cost_c > 0.0)) throw ValidationError("cost C must be positive");
  if (!(epsilon_tube >= 0.0)) throw ValidationError("epsilon must be non-negative");
  for (double a : dual_coefficients) {
    if (!std::isfinite(a) || std::abs(a) > cost_c) {
      throw ValidationError(fmt::format("dual coefficient {} violates |a| <= C = {}", a, cost_c));
    }
  }
}

double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma) {
  double d2 = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    d2 += d * d;
  }
  return std::exp(-gamma * d2);
}

namespace {

void check_training_inputs(const Matrix& features, std::span<const double> scores) {
  if (features.rows != scores.size()) {
    throw ValidationError(fmt::format("{} feature rows but {} scores", features.rows, scores.size()));
  }
  if (features.rows < 4) throw ValidationError("SVR training needs at least 4 samples");
  if (features.cols == 0) throw ValidationError("SVR training needs at least one feature");
  for (std::size_t k = 0; k < features.data.size(); ++k) {
    if (!std::isfinite(features.data[k])) {
      throw ValidationError(fmt::format("non-finite feature at row {}, column {}",
                                        k / features.cols, k % features.cols));
    }
  }
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i])) throw ValidationError(fmt::format("non-finite score at row {}", i));
  }
}

/// Dual variables for epsilon-SVR in the doubled form: t < l pushes the
/// prediction up (label +1), t >= l pushes it down (label -1).
class SmoSolver {
 public:
  SmoSolver(const Matrix& scaled, std::span<const double> targets, const SvrParams& params,
            double gamma)
      : l_(scaled.rows), c_(params.c), alpha_(2 * l_, 0.0), grad_(2 * l_), kernel_(l_ * l_) {
    for (std::size_t i = 0; i < l_; ++i) {
      for (std::size_t j = i; j < l_; ++j) {
        const double k = rbf_kernel(scaled.row(i), scaled.row(j), gamma);
        kernel_[i * l_ + j] = k;
        kernel_[j * l_ + i] = k;
      }
    }
    for (std::size_t i = 0; i < l_; ++i) {
      grad_[i] = params.epsilon - targets[i];
      grad_[i + l_] = params.epsilon + targets[i];
    }
  }

  void solve(double tolerance, std::int64_t max_iterations) {
    for (iterations_ = 0; iterations_ < max_iterations; ++iterations_) {
      const auto [i, j, gap] = select_pair();
      gap_ = gap;
      if (gap <= tolerance) {
        converged_ = true;
        return;
      }
      update_pair(i, j);
    }
    gap_ = std::get<2>(select_pair());
    converged_ = gap_ <= tolerance;
  }

  /// beta_i = alpha_i - alpha*_i.
  std::vector<double> coefficients() const {
    std::vector<double> beta(l_);
    for (std::size_t i = 0; i < l_; ++i) beta[i] = alpha_[i] - alpha_[i + l_];
    return beta;
  }

  /// Decision offset rho (prediction = kernel sum - rho).
  double rho() const {
    double ub = std::numeric_limits<double>::infinity();
    double lb = -std::numeric_limits<double>::infinity();
    double free_sum = 0.0;
    std::size_t free_count = 0;
    for (std::size_t t = 0; t < 2 * l_; ++t) {
      const double yg = label(t) * grad_[t];
      if (alpha_[t] >= c_) {
        if (label(t) < 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
      } else if (alpha_[t] <= 0.0) {
        if (label(t) > 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
      } else {
        free_sum += yg;
        ++free_count;
      }
    }
    return free_count > 0 ? free_sum / static_cast<double>(free_count) : 0.5 * (ub + lb);
  }

  std::int64_t iterations() const { return iterations_; }
  double gap() const { return gap_; }
  bool converged() const { return converged_; }

 private:
  double label(std::size_t t) const { return t < l_ ? 1.0 : -1.0; }
  double q(std::size_t s, std::size_t t) const {
    return label(s) * label(t) * kernel_[(s % l_) * l_ + (t % l_)];
  }
  bool in_up(std::size_t t) const { return label(t) > 0 ? alpha_[t] < c_ : alpha_[t] > 0.0; }
  bool in_low(std::size_t t) const { return label(t) > 0 ? alpha_[t] > 0.0 : alpha_[t] < c_; }

  std::tuple<std::size_t, std::size_t, double> select_pair() const {
    double up_max = -std::numeric_limits<double>::infinity();
    double low_min = std::numeric_limits<double>::infinity();
    std::size_t i = 0;
    std::size_t j = 0;
    for (std::size_t t = 0; t < 2 * l_; ++t) {
      const double v = -label(t) * grad_[t];
      if (in_up(t) && v > up_max) {
        up_max = v;
        i = t;
      }
      if (in_low(t) && v < low_min) {
        low_min = v;
        j = t;
      }
    }
    return {i, j, up_max - low_min};
  }

  void update_pair(std::size_t i, std::size_t j) {
    constexpr double kTau = 1e-12;
    const double old_i = alpha_[i];
    const double old_j = alpha_[j];
    const double qii = q(i, i);
    const double qjj = q(j, j);
    const double qij = q(i, j);
    double& ai = alpha_[i];
    double& aj = alpha_[j];
    if (label(i) != label(j)) {
      double quad = qii + qjj + 2.0 * qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad_[i] - grad_[j]) / quad;
      const double diff = ai - aj;
      ai += delta;
      aj += delta;
      if (diff > 0.0) {
        if (aj < 0.0) { aj = 0.0; ai = diff; }
      } else if (ai < 0.0) {
        ai = 0.0; aj = -diff;
      }
      if (diff > 0.0) {
        if (ai > c_) { ai = c_; aj = c_ - diff; }
      } else if (aj > c_) {
        aj = c_; ai = c_ + diff;
      }
    } else {
      double quad = qii + qjj - 2.0 * qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad_[i] - grad_[j]) / quad;
      const double sum = ai + aj;
      ai -= delta;
      aj += delta;
      if (sum > c_) {
        if (ai > c_) { ai = c_; aj = sum - c_; }
      } else if (aj < 0.0) {
        aj = 0.0; ai = sum;
      }
      if (sum > c_) {
        if (aj > c_) { aj = c_; ai = sum - c_; }
      } else if (ai < 0.0) {
        ai = 0.0; aj = sum;
      }
    }
    const double di = ai - old_i;
    const double dj = aj - old_j;
    for (std::size_t t = 0; t < 2 * l_; ++t) grad_[t] += q(t, i) * di + q(t, j) * dj;
  }

  std::size_t l_;
  double c_;
  std::vector<double> alpha_;
  std::vector<double> grad_;
  std::vector<double> kernel_;
  std::int64_t iterations_ = 0;
  double gap_ = 0.0;
  bool converged_ = false;
};

}  // namespace

TrainResult train_svr(const Matrix& features, std::span<const double> scores,
                      const SvrParams& params) {
  check_training_inputs(features, scores);
  if (!(params.c > 0.0)) throw ValidationError("SVR cost C must be positive");
  if (!(params.epsilon >= 0.0)) throw ValidationError("SVR epsilon must be non-negative");
  if (!(params.tolerance > 0.0)) throw ValidationError("SVR tolerance must be positive");

  TrainResult result;
  RegressionModel& model = result.model;
  model.scaler = FeatureScaler::fit(features);
  model.kernel_gamma = params.resolved_gamma(features.cols);
  model.cost_c = params.c;
  model.epsilon_tube = params.epsilon;

  const Matrix scaled = model.scaler.apply(features);
  SmoSolver solver(scaled, scores, params, model.kernel_gamma);
  solver.solve(params.tolerance, params.max_iterations);

  const auto beta = solver.coefficients();
  model.support_vectors = Matrix(0, features.cols);
  for (std::size_t i = 0; i < beta.size(); ++i) {
    if (beta[i] != 0.0) {
      model.support_vectors.append_row(scaled.row(i));
      model.dual_coefficients.push_back(beta[i]);
    }
  }
  model.bias = -solver.rho();
  result.iterations = solver.iterations();
  result.kkt_gap = solver.gap();
  result.converged = solver.converged();
  return result;
}

double predict(const RegressionModel& model, std::span<const double> features) {
  if (features.size() != model.feature_dim()) {
    throw ValidationError(fmt::format("feature length {} does not match model dimension {}",
                                      features.size(), model.feature_dim()));
  }
  for (double v : features) {
    if (!std::isfinite(v)) throw ValidationError("non-finite feature passed to predict");
  }
  const auto x = model.scaler.apply(features);
  double sum = 0.0;
  for (std::size_t i = 0; i < model.dual_coefficients.size(); ++i) {
    sum += model.dual_coefficients[i] * rbf_kernel(model.support_vectors.row(i), x, model.kernel_gamma);
  }
  return sum + model.bias;
}

std::vector<double> predict(const RegressionModel& model, const Matrix& features) {
  std::vector<double> out(features.rows);
  for (std::size_t i = 0; i < features.rows; ++i) out[i] = predict(model, features.row(i));
  return out;
}

GridSearchResult grid_search_svr(const Matrix& features, std::span<const double> scores,
                                 const SvrParams& base, const GridSearchOptions& options) {
  check_training_inputs(features, scores);
  const std::size_t n = features.rows;
  const auto folds = static_cast<std::size_t>(options.folds);
  if (folds < 2 || folds > n) throw ValidationError("grid search fold count must lie in [2, n]");

  const auto order = shuffled_indices(n, options.seed);
  std::vector<std::size_t> fold_of(n);
  for (std::size_t k = 0; k < n; ++k) fold_of[order[k]] = k % folds;

  struct Split {
    Matrix train_x;
    std::vector<double> train_y;
    Matrix test_x;
    std::vector<double> test_y;
  };
  std::vector<Split> splits(folds);
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<std::size_t> train_idx;
    std::vector<std::size_t> test_idx;
    for (std::size_t i = 0; i < n; ++i) (fold_of[i] == f ? test_idx : train_idx).push_back(i);
    splits[f].train_x = features.select_rows(train_idx);
    splits[f].test_x = features.select_rows(test_idx);
    for (auto i : train_idx) splits[f].train_y.push_back(scores[i]);
    for (auto i : test_idx) splits[f].test_y.push_back(scores[i]);
  }

  GridSearchResult best;
  best.best_cv_mse = std::numeric_limits<double>::infinity();
  for (int lc = options.log2_c_min; lc <= options.log2_c_max; ++lc) {
    for (int lg = options.log2_gamma_min; lg <= options.log2_gamma_max; ++lg) {
      SvrParams p = base;
      p.c = std::ldexp(1.0, lc);
      p.gamma = std::ldexp(1.0, lg);
      double sq = 0.0;
      std::size_t count = 0;
      for (const auto& s : splits) {
        if (s.train_x.rows < 4) continue;
        const auto fit = train_svr(s.train_x, s.train_y, p);
        const auto pred = predict(fit.model, s.test_x);
        for (std::size_t k = 0; k < pred.size(); ++k) {
          sq += (pred[k] - s.test_y[k]) * (pred[k] - s.test_y[k]);
          ++count;
        }
      }
      const double mse = count > 0 ? sq / static_cast<double>(count) : std::numeric_limits<double>::infinity();
      if (mse < best.best_cv_mse) {
        best.best_cv_mse = mse;
        best.best = p;
      }
    }
  }
  if (!std::isfinite(best.best_cv_mse)) throw NumericalError("grid search produced no finite CV error");
  return best;
}

}  // namespace mfilgn
