#include "mfilgn/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <fmt/format.h>

#include "mfilgn/errors.hpp"
#include "mfilgn/parallel.hpp"
#include "mfilgn/random.hpp"

namespace mfilgn {
namespace {

void check_pair(std::span<const double> a, std::span<const double> b, std::size_t min_n,
                const char* what) {
  if (a.size() != b.size()) {
    throw ValidationError(fmt::format("{}: length mismatch ({} vs {})", what, a.size(), b.size()));
  }
  if (a.size() < min_n) {
    throw ValidationError(fmt::format("{} needs at least {} samples, got {}", what, min_n, a.size()));
  }
}

double pearson(std::span<const double> a, std::span<const double> b, const char* what) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) {
    throw NumericalError(fmt::format("{} undefined for a constant input", what));
  }
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

}  // namespace

std::vector<double> fractional_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    // Positions i..j-1 (0-based) share rank mean((i+1)..j).
    const double rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

double srocc(std::span<const double> subjective, std::span<const double> objective) {
  check_pair(subjective, objective, 3, "SROCC");
  const auto rs = fractional_ranks(subjective);
  const auto ro = fractional_ranks(objective);
  return pearson(rs, ro, "SROCC");
}

double plcc(std::span<const double> subjective, std::span<const double> objective) {
  check_pair(subjective, objective, 3, "PLCC");
  return pearson(subjective, objective, "PLCC");
}

double rmse(std::span<const double> subjective, std::span<const double> objective) {
  check_pair(subjective, objective, 1, "RMSE");
  double sq = 0.0;
  for (std::size_t i = 0; i < subjective.size(); ++i) {
    const double d = subjective[i] - objective[i];
    sq += d * d;
  }
  return std::sqrt(sq / static_cast<double>(subjective.size()));
}

EvalReport evaluate_predictions(std::span<const double> mos, std::span<const double> predicted) {
  check_pair(mos, predicted, 3, "evaluation");
  EvalReport report;
  report.n = mos.size();
  report.srocc = srocc(mos, predicted);
  if (mos.size() < kMinLogisticSamples) {
    // Too few points to constrain five parameters: identity mapping.
    report.logistic.beta = {0.0, 0.0, 0.0, 1.0, 0.0};
    report.logistic_converged = false;
    report.plcc = plcc(mos, predicted);
    report.rmse = rmse(mos, predicted);
    return report;
  }
  const LogisticFit fit = fit_logistic(predicted, mos);
  report.logistic = fit.params;
  report.logistic_converged = fit.converged;
  const auto mapped = fit.params.apply(predicted);
  report.plcc = plcc(mos, mapped);
  report.rmse = rmse(mos, mapped);
  return report;
}

MetricSummary summarize(std::span<const double> values) {
  MetricSummary s;
  if (values.empty()) return s;
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  s.median = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
  if (n > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(n - 1));
  }
  return s;
}

SplitIndices split_dataset(std::size_t n, double train_fraction, std::uint64_t seed,
                           SplitMode mode, std::span<const std::string> groups) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ValidationError(fmt::format("train fraction must lie in (0, 1), got {}", train_fraction));
  }
  SplitIndices out;
  if (mode == SplitMode::kImage) {
    const auto order = shuffled_indices(n, seed);
    const auto n_train = static_cast<std::size_t>(std::lround(train_fraction * static_cast<double>(n)));
    out.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
    return out;
  }

  if (groups.size() != n) {
    throw ValidationError("content split needs one reference id per item");
  }
  // Group ids in first-appearance order, then shuffled as units.
  std::vector<std::string> ids;
  std::map<std::string, std::size_t> id_index;
  for (const auto& g : groups) {
    if (id_index.emplace(g, ids.size()).second) ids.push_back(g);
  }
  const auto order = shuffled_indices(ids.size(), seed);
  const auto n_train_groups =
      static_cast<std::size_t>(std::lround(train_fraction * static_cast<double>(ids.size())));
  std::vector<bool> train_group(ids.size(), false);
  for (std::size_t k = 0; k < n_train_groups; ++k) train_group[order[k]] = true;
  for (std::size_t i = 0; i < n; ++i) {
    (train_group[id_index.at(groups[i])] ? out.train : out.test).push_back(i);
  }
  return out;
}

TrialSummary run_trials(const Matrix& features, std::span<const double> mos,
                        const TrialOptions& options, std::span<const std::string> groups) {
  if (features.rows != mos.size()) {
    throw ValidationError(fmt::format("{} feature rows but {} scores", features.rows, mos.size()));
  }
  if (features.rows < 10) throw ValidationError("trial protocol needs at least 10 items");
  if (options.trials < 1) throw ValidationError("trial count must be >= 1");
  if (options.split_mode == SplitMode::kContent && groups.size() != mos.size()) {
    throw ValidationError("content split mode needs a reference id for every item");
  }

  TrialSummary summary;
  summary.trials.resize(static_cast<std::size_t>(options.trials));
  parallel_for(summary.trials.size(), options.jobs, [&](std::size_t t) {
    TrialRecord& rec = summary.trials[t];
    rec.index = static_cast<int>(t);
    rec.seed = mix_seed(options.seed, t);
    try {
      const auto split = split_dataset(features.rows, options.train_fraction, rec.seed,
                                       options.split_mode, groups);
      rec.train_size = split.train.size();
      rec.test_size = split.test.size();
      const Matrix train_x = features.select_rows(split.train);
      const Matrix test_x = features.select_rows(split.test);
      std::vector<double> train_y;
      std::vector<double> test_y;
      for (auto i : split.train) train_y.push_back(mos[i]);
      for (auto i : split.test) test_y.push_back(mos[i]);

      SvrParams params = options.svr;
      if (options.grid_search) {
        GridSearchOptions gs;
        gs.seed = rec.seed;
        params = grid_search_svr(train_x, train_y, options.svr, gs).best;
      }
      const auto fit = train_svr(train_x, train_y, params);
      const auto predicted = predict(fit.model, test_x);
      const EvalReport report = evaluate_predictions(test_y, predicted);
      rec.srocc = report.srocc;
      rec.plcc = report.plcc;
      rec.rmse = report.rmse;
      rec.ok = true;
    } catch (const std::exception& e) {
      rec.ok = false;
      rec.error = e.what();
    }
  });

  std::vector<double> s;
  std::vector<double> p;
  std::vector<double> r;
  for (const auto& rec : summary.trials) {
    if (!rec.ok) {
      ++summary.failures;
      continue;
    }
    s.push_back(rec.srocc);
    p.push_back(rec.plcc);
    r.push_back(rec.rmse);
  }
  summary.srocc = summarize(s);
  summary.plcc = summarize(p);
  summary.rmse = summarize(r);
  return summary;
}

}  // namespace mfilgn
