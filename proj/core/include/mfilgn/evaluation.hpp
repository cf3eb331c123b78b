#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mfilgn/matrix.hpp"
#include "mfilgn/regression.hpp"

namespace mfilgn {

/// Average (fractional) ranks, 1-based; tied values share their mean rank.
std::vector<double> fractional_ranks(std::span<const double> values);

/// Spearman rank-order correlation: Pearson correlation of fractional ranks,
/// which equals 1 - 6 sum d^2 / (n (n^2 - 1)) when there are no ties.
/// Needs n >= 3; NumericalError if either input is constant.
double srocc(std::span<const double> subjective, std::span<const double> objective);

/// Pearson linear correlation. Needs n >= 3; NumericalError on zero variance.
double plcc(std::span<const double> subjective, std::span<const double> objective);

double rmse(std::span<const double> subjective, std::span<const double> objective);

/// g(x) = b1 (1/2 - 1 / (1 + exp(b2 (x - b3)))) + b4 x + b5
struct LogisticParams {
  std::array<double, 5> beta{};

  double operator()(double x) const;
  std::vector<double> apply(std::span<const double> x) const;
};

struct LogisticFit {
  LogisticParams params;
  double sse = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Raw scores were constant; a flat fit was returned.
  bool degenerate = false;
};

/// Nonlinear least squares (Levenberg-Marquardt, central-difference
/// Jacobian, 500-iteration cap). Needs n >= 5.
LogisticFit fit_logistic(std::span<const double> raw, std::span<const double> mos);

struct EvalReport {
  double srocc = 0.0;
  double plcc = 0.0;
  double rmse = 0.0;
  LogisticParams logistic;
  std::size_t n = 0;
  bool logistic_converged = true;
};

inline constexpr std::size_t kMinLogisticSamples = 5;

/// SROCC on raw predictions; PLCC and RMSE after logistic remapping. With
/// fewer than kMinLogisticSamples pairs the mapping is the identity.
EvalReport evaluate_predictions(std::span<const double> mos, std::span<const double> predicted);

enum class SplitMode { kImage, kContent };

struct TrialOptions {
  int trials = 1000;
  double train_fraction = 0.8;
  std::uint64_t seed = 1;
  SplitMode split_mode = SplitMode::kImage;
  SvrParams svr;
  bool grid_search = false;
  unsigned jobs = 1;
};

struct TrialRecord {
  int index = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  double srocc = 0.0;
  double plcc = 0.0;
  double rmse = 0.0;
};

struct MetricSummary {
  double median = 0.0;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation (n - 1); 0 for one trial
};

struct TrialSummary {
  std::vector<TrialRecord> trials;
  MetricSummary srocc;
  MetricSummary plcc;
  MetricSummary rmse;
  std::size_t failures = 0;
};

MetricSummary summarize(std::span<const double> values);

/// Indices of the training and test partitions for one trial. In content
/// mode whole groups move together and the fraction applies to groups.
struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

SplitIndices split_dataset(std::size_t n, double train_fraction, std::uint64_t seed,
                           SplitMode mode = SplitMode::kImage,
                           std::span<const std::string> groups = {});

/// Repeated random train/test evaluation. `groups` (reference content ids)
/// is required for SplitMode::kContent.
TrialSummary run_trials(const Matrix& features, std::span<const double> mos,
                        const TrialOptions& options, std::span<const std::string> groups = {});

}  // namespace mfilgn
