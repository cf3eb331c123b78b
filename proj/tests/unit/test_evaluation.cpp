#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "mfilgn/errors.hpp"
#include "mfilgn/evaluation.hpp"
#include "oracles.hpp"

using namespace mfilgn;
namespace oracle = mfilgn::testing;

namespace {

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

// 1 - 6 sum d^2 / (n (n^2 - 1)), valid only without ties.
double closed_form_srocc(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  auto rank = [n](std::span<const double> v) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> r(n);
    for (std::size_t k = 0; k < n; ++k) r[idx[k]] = static_cast<double>(k + 1);
    return r;
  };
  const auto ra = rank(a);
  const auto rb = rank(b);
  double d2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) d2 += (ra[i] - rb[i]) * (ra[i] - rb[i]);
  const double nn = static_cast<double>(n);
  return 1.0 - 6.0 * d2 / (nn * (nn * nn - 1.0));
}

Matrix column(std::span<const double> x) {
  Matrix m;
  for (double v : x) m.append_row(std::vector<double>{v});
  return m;
}

}  // namespace

TEST_CASE("SROCC hand cases") {
  const std::vector<double> s{1, 2, 3, 4, 5};
  CHECK(srocc(s, std::vector<double>{1, 3, 2, 5, 4}) == 0.8);
  CHECK(srocc(s, std::vector<double>{10, 20, 30, 40, 50}) == 1.0);
  CHECK(srocc(s, std::vector<double>{5, 4, 3, 2, 1}) == -1.0);
  CHECK(srocc(s, std::vector<double>{std::exp(1.0), std::exp(2.0), std::exp(3.0), std::exp(4.0),
                                     std::exp(5.0)}) == 1.0);
}

TEST_CASE("PLCC and RMSE hand cases") {
  const std::vector<double> s{0, 1, 2};
  // Squared differences (0, 1, 1) and (0, 1, 9).
  CHECK(rmse(s, std::vector<double>{0, 0, 3}) == std::sqrt(2.0 / 3.0));
  CHECK(rmse(s, std::vector<double>{0, 0, 5}) == std::sqrt(10.0 / 3.0));
  CHECK(plcc(s, s) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(rmse(s, s) == 0.0);
  CHECK(plcc(s, std::vector<double>{7, 6, 5}) == doctest::Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("fractional ranks average ties") {
  const auto r = fractional_ranks(std::vector<double>{3.0, 1.0, 3.0, 2.0, 3.0});
  CHECK(r == std::vector<double>{4.0, 1.0, 4.0, 2.0, 4.0});
}

TEST_CASE("metrics agree with brute-force oracles") {
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const auto a = random_vector(rng, 50);
    auto b = random_vector(rng, 50);
    if (t % 4 == 0) {
      for (auto& v : b) v = std::round(v * 2.0);  // forces ties
    }
    worst = std::max(worst, std::abs(srocc(a, b) - oracle::brute_srocc(a, b)));
    worst = std::max(worst, std::abs(plcc(a, b) - oracle::brute_pearson(a, b)));
    worst = std::max(worst, std::abs(rmse(a, b) - oracle::brute_rmse(a, b)));
    if (t % 4 != 0) worst = std::max(worst, std::abs(srocc(a, b) - closed_form_srocc(a, b)));
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("metric invariances") {
  std::mt19937_64 rng(7);
  const auto a = random_vector(rng, 40);
  const auto b = random_vector(rng, 40);
  std::vector<double> b_mono(b.size());
  std::vector<double> b_affine(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) {
    b_mono[i] = std::exp(3.0 * b[i]) + b[i];
    b_affine[i] = 4.5 * b[i] - 12.0;
  }
  CHECK(srocc(a, b_mono) == srocc(a, b));
  CHECK(plcc(a, b_affine) == doctest::Approx(plcc(a, b)).epsilon(1e-12));
  CHECK(rmse(a, b) == rmse(b, a));
}

TEST_CASE("metric preconditions") {
  const std::vector<double> flat(5, 2.0);
  const std::vector<double> ramp{1, 2, 3, 4, 5};
  CHECK_THROWS_AS(srocc(flat, ramp), NumericalError);
  CHECK_THROWS_AS(plcc(ramp, flat), NumericalError);
  CHECK_THROWS_AS(srocc(std::vector<double>{1, 2}, std::vector<double>{1, 2}), ValidationError);
  CHECK_THROWS_AS(plcc(ramp, std::vector<double>{1, 2, 3}), ValidationError);
}

TEST_CASE("logistic recovers data generated from known parameters") {
  LogisticParams truth;
  truth.beta = {40.0, 0.8, 5.0, 1.5, 50.0};
  std::vector<double> raw;
  for (int i = 0; i <= 40; ++i) raw.push_back(0.25 * i);
  const auto mos = truth.apply(raw);
  const auto fit = fit_logistic(raw, mos);
  const auto mapped = fit.params.apply(raw);
  const auto [lo, hi] = std::minmax_element(mos.begin(), mos.end());
  CHECK(oracle::brute_rmse(mapped, mos) <= 1e-6 * (*hi - *lo));
  CHECK_FALSE(fit.degenerate);
}

TEST_CASE("logistic reproduces a linear relation") {
  std::vector<double> raw{0.0, 1.0, 2.5, 3.0, 4.0, 6.0, 7.5};
  std::vector<double> mos;
  for (double x : raw) mos.push_back(2.0 * x + 3.0);
  const auto fit = fit_logistic(raw, mos);
  for (std::size_t i = 0; i < raw.size(); ++i) CHECK(std::abs(fit.params(raw[i]) - mos[i]) <= 1e-6);
}

TEST_CASE("monotone logistic fit preserves SROCC") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> noise(0.0, 4.0);
  std::vector<double> raw;
  std::vector<double> mos;
  for (int i = 0; i < 60; ++i) {
    const double x = 0.1 * i;
    raw.push_back(x);
    mos.push_back(80.0 / (1.0 + std::exp(-(x - 3.0))) + 10.0 + noise(rng));
  }
  const auto fit = fit_logistic(raw, mos);
  const auto mapped = fit.params.apply(raw);
  bool monotone = true;
  for (std::size_t i = 1; i < mapped.size(); ++i) monotone = monotone && mapped[i] > mapped[i - 1];
  REQUIRE(monotone);
  CHECK(srocc(mos, mapped) == srocc(mos, raw));
}

TEST_CASE("logistic degenerate and small inputs") {
  const auto fit = fit_logistic(std::vector<double>(6, 1.0), std::vector<double>{1, 2, 3, 4, 5, 6});
  CHECK(fit.degenerate);
  CHECK(fit.params.beta[0] == 0.0);
  CHECK(fit.params.beta[1] == 0.0);
  CHECK(fit.params(1.0) == doctest::Approx(3.5).epsilon(1e-12));
  CHECK_THROWS_AS(fit_logistic(std::vector<double>{1, 2, 3, 4}, std::vector<double>{1, 2, 3, 4}),
                  ValidationError);
}

TEST_CASE("evaluate_predictions") {
  std::vector<double> mos;
  std::vector<double> pred;
  for (int i = 0; i < 20; ++i) {
    mos.push_back(5.0 * i);
    pred.push_back(std::tanh(0.2 * (i - 10)));
  }
  const auto rep = evaluate_predictions(mos, pred);
  CHECK(rep.n == 20);
  CHECK(rep.srocc == 1.0);
  CHECK(rep.plcc >= 0.99);
  CHECK(rep.rmse >= 0.0);

  // Below the logistic minimum the mapping is the identity.
  const std::vector<double> m3{1.0, 2.0, 4.0};
  const std::vector<double> p3{1.5, 2.0, 3.0};
  const auto small = evaluate_predictions(m3, p3);
  CHECK_FALSE(small.logistic_converged);
  CHECK(small.plcc == plcc(m3, p3));
  CHECK(small.rmse == rmse(m3, p3));
  CHECK_THROWS_AS(evaluate_predictions(std::vector<double>{1, 2}, std::vector<double>{1, 2}),
                  ValidationError);
}

TEST_CASE("split sizes are exact, disjoint and covering") {
  for (std::size_t n : {10u, 11u, 37u, 100u}) {
    for (double frac : {0.5, 0.8}) {
      const auto s = split_dataset(n, frac, 99);
      CHECK(s.train.size() == static_cast<std::size_t>(std::lround(frac * static_cast<double>(n))));
      std::set<std::size_t> all(s.train.begin(), s.train.end());
      for (auto i : s.test) CHECK(all.insert(i).second);
      CHECK(all.size() == n);
      CHECK(*all.rbegin() == n - 1);
    }
  }
  const auto a = split_dataset(30, 0.8, 5);
  const auto b = split_dataset(30, 0.8, 5);
  CHECK(a.train == b.train);
  CHECK(split_dataset(30, 0.8, 6).train != a.train);
}

TEST_CASE("content split keeps groups together") {
  std::vector<std::string> groups;
  for (int i = 0; i < 40; ++i) groups.push_back("ref" + std::to_string(i / 5));
  const auto s = split_dataset(40, 0.75, 3, SplitMode::kContent, groups);
  std::set<std::string> train_groups;
  for (auto i : s.train) train_groups.insert(groups[i]);
  for (auto i : s.test) CHECK(train_groups.count(groups[i]) == 0);
  CHECK(train_groups.size() == 6);  // round(0.75 * 8)
  CHECK(s.train.size() + s.test.size() == 40);
  CHECK_THROWS_AS(split_dataset(40, 0.75, 3, SplitMode::kContent), ValidationError);
}

TEST_CASE("trials: perfectly learnable data, determinism and summary") {
  std::vector<double> x;
  std::vector<double> mos;
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    x.push_back(u(rng));
    mos.push_back(100.0 * x.back());
  }
  TrialOptions opts;
  opts.trials = 5;
  opts.seed = 7;
  const auto a = run_trials(column(x), mos, opts);
  CHECK(a.failures == 0);
  CHECK(std::abs(a.srocc.median - 1.0) <= 1e-9);
  for (const auto& t : a.trials) {
    CHECK(t.ok);
    CHECK(t.train_size == 40);
    CHECK(t.test_size == 10);
  }

  opts.jobs = 3;
  const auto b = run_trials(column(x), mos, opts);
  REQUIRE(b.trials.size() == a.trials.size());
  for (std::size_t i = 0; i < a.trials.size(); ++i) {
    CHECK(a.trials[i].seed == b.trials[i].seed);
    CHECK(a.trials[i].srocc == b.trials[i].srocc);
    CHECK(a.trials[i].plcc == b.trials[i].plcc);
    CHECK(a.trials[i].rmse == b.trials[i].rmse);
  }

  opts.trials = 3;
  opts.jobs = 1;
  const auto three = run_trials(column(x), mos, opts);
  std::vector<double> r;
  for (const auto& t : three.trials) r.push_back(t.rmse);
  std::sort(r.begin(), r.end());
  CHECK(three.rmse.median == r[1]);
}

TEST_CASE("summarize median, mean and sample deviation") {
  const auto s = summarize(std::vector<double>{4.0, 1.0, 3.0, 2.0});
  CHECK(s.median == 2.5);
  CHECK(s.mean == 2.5);
  CHECK(s.stddev == doctest::Approx(std::sqrt(5.0 / 3.0)).epsilon(1e-15));
  const auto one = summarize(std::vector<double>{7.0});
  CHECK(one.median == 7.0);
  CHECK(one.stddev == 0.0);
}

TEST_CASE("trial preconditions") {
  std::vector<double> x(9, 0.0);
  std::vector<double> mos(9, 0.0);
  for (int i = 0; i < 9; ++i) x[static_cast<std::size_t>(i)] = mos[static_cast<std::size_t>(i)] = i;
  TrialOptions opts;
  opts.trials = 1;
  CHECK_THROWS_AS(run_trials(column(x), mos, opts), ValidationError);
}
