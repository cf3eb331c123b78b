#include "mfilgn/special_functions.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include "mfilgn/errors.hpp"

namespace mfilgn {
namespace {

constexpr double kLanczosG = 7.0;
constexpr std::array<double, 9> kLanczosCoefficients = {
    0.99999999999980993,     676.5203681218851,   -1259.1392167224028,
    771.32342877765313,      -176.61502916214059, 12.507343278686905,
    -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7,
};

// Lanczos series for x >= 0.5.
double lanczos_log_gamma(double x) {
  const double z = x - 1.0;
  double sum = kLanczosCoefficients[0];
  for (std::size_t i = 1; i < kLanczosCoefficients.size(); ++i) {
    sum += kLanczosCoefficients[i] / (z + static_cast<double>(i));
  }
  const double t = z + kLanczosG + 0.5;
  return 0.5 * std::log(2.0 * std::numbers::pi) + (z + 0.5) * std::log(t) - t + std::log(sum);
}

}  // namespace

double log_gamma_fn(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) throw ValidationError("log_gamma_fn requires x > 0");
  if (x < 0.5) {
    // Reflection: Gamma(x) Gamma(1 - x) = pi / sin(pi x).
    return std::log(std::numbers::pi / std::sin(std::numbers::pi * x)) - lanczos_log_gamma(1.0 - x);
  }
  return lanczos_log_gamma(x);
}

double gamma_fn(double x) { return std::exp(log_gamma_fn(x)); }

double ggd_moment_ratio(double shape) {
  const double lg1 = log_gamma_fn(1.0 / shape);
  const double lg2 = log_gamma_fn(2.0 / shape);
  const double lg3 = log_gamma_fn(3.0 / shape);
  return std::exp(2.0 * lg2 - lg1 - lg3);
}

}  // namespace mfilgn
