#include "mfilgn/viewport.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>

#include <fmt/format.h>

#include "mfilgn/errors.hpp"
#include "mfilgn/parallel.hpp"

namespace mfilgn {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;

double wrap_longitude(double lon) {
  double wrapped = std::fmod(lon + 180.0, 360.0);
  if (wrapped < 0.0) wrapped += 360.0;
  return wrapped - 180.0;
}

double sample_bilinear_erp(const Raster& erp, double fx, double fy) {
  const auto w = static_cast<std::ptrdiff_t>(erp.width());
  const auto h = static_cast<std::ptrdiff_t>(erp.height());
  fy = std::clamp(fy, 0.0, static_cast<double>(h - 1));
  const double x_floor = std::floor(fx);
  const double y_floor = std::floor(fy);
  const double ax = fx - x_floor;
  const double ay = fy - y_floor;
  auto wrap_col = [w](std::ptrdiff_t c) {
    c %= w;
    return c < 0 ? c + w : c;
  };
  const std::ptrdiff_t x0 = wrap_col(static_cast<std::ptrdiff_t>(x_floor));
  const std::ptrdiff_t x1 = wrap_col(x0 + 1);
  const auto y0 = static_cast<std::ptrdiff_t>(y_floor);
  const std::ptrdiff_t y1 = std::min(y0 + 1, h - 1);
  const auto at = [&erp](std::ptrdiff_t x, std::ptrdiff_t y) {
    return erp.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y));
  };
  const double top = (1.0 - ax) * at(x0, y0) + ax * at(x1, y0);
  const double bottom = (1.0 - ax) * at(x0, y1) + ax * at(x1, y1);
  return (1.0 - ay) * top + ay * bottom;
}

}  // namespace

void ViewportSamplingConfig::validate() const {
  if (equator_count_m0 < 4) {
    throw ValidationError(fmt::format("equator viewport count must be >= 4, got {}", equator_count_m0));
  }
  if (!(fov_degrees > 0.0 && fov_degrees < 180.0)) {
    throw ValidationError(fmt::format("viewport FoV must lie in (0, 180), got {}", fov_degrees));
  }
  if (viewport_size < 1) throw ValidationError("viewport size must be positive");
}

std::vector<LatitudeRing> plan_rings(const ViewportSamplingConfig& cfg) {
  cfg.validate();
  const double step = cfg.ring_step_degrees();
  std::vector<LatitudeRing> rings{{0.0, cfg.equator_count_m0}};
  for (int k = 1; k * step <= 90.0 + 1e-9; ++k) {
    const double lat = std::min(k * step, 90.0);
    const int count = static_cast<int>(std::lround(cfg.equator_count_m0 * std::cos(lat * kDegToRad)));
    rings.push_back({lat, count});
    rings.push_back({-lat, count});
  }
  return rings;
}

std::vector<ViewportSpec> plan_viewports(const ViewportSamplingConfig& cfg) {
  std::vector<ViewportSpec> specs;
  for (const auto& ring : plan_rings(cfg)) {
    for (int i = 0; i < ring.count; ++i) {
      specs.push_back({wrap_longitude(360.0 * i / ring.count), ring.latitude, cfg.fov_degrees,
                       cfg.viewport_size});
    }
  }
  return specs;
}

Raster project_viewport(const Raster& erp, const ViewportSpec& spec) {
  if (erp.empty()) throw ValidationError("cannot project from an empty ERP raster");
  if (!(spec.fov_degrees > 0.0 && spec.fov_degrees < 180.0) || spec.size < 1) {
    throw ValidationError("invalid viewport spec");
  }
  const double lon0 = spec.center_longitude * kDegToRad;
  const double lat0 = spec.center_latitude * kDegToRad;
  // Camera basis: forward toward the centre, right pointing east, up toward
  // increasing latitude. Defined from lon0 alone, so poles need no special case.
  const double fwd[3] = {std::cos(lat0) * std::cos(lon0), std::cos(lat0) * std::sin(lon0),
                         std::sin(lat0)};
  const double right[3] = {-std::sin(lon0), std::cos(lon0), 0.0};
  const double up[3] = {-std::sin(lat0) * std::cos(lon0), -std::sin(lat0) * std::sin(lon0),
                        std::cos(lat0)};

  const double half_extent = std::tan(0.5 * spec.fov_degrees * kDegToRad);
  const auto n = static_cast<std::size_t>(spec.size);
  const double w = static_cast<double>(erp.width());
  const double h = static_cast<double>(erp.height());
  Raster out(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const double b = (1.0 - 2.0 * (static_cast<double>(i) + 0.5) / spec.size) * half_extent;
    for (std::size_t j = 0; j < n; ++j) {
      const double a = (2.0 * (static_cast<double>(j) + 0.5) / spec.size - 1.0) * half_extent;
      const double dx = fwd[0] + a * right[0] + b * up[0];
      const double dy = fwd[1] + a * right[1] + b * up[1];
      const double dz = fwd[2] + a * right[2] + b * up[2];
      const double lon = std::atan2(dy, dx) * kRadToDeg;
      const double lat = std::atan2(dz, std::hypot(dx, dy)) * kRadToDeg;
      const double fx = (lon / 360.0 + 0.5) * w - 0.5;
      const double fy = (0.5 - lat / 180.0) * h - 0.5;
      out.at(j, i) = sample_bilinear_erp(erp, fx, fy);
    }
  }
  return out;
}

ViewportSet extract_viewports(const Raster& erp, const ViewportSamplingConfig& cfg, unsigned jobs) {
  ViewportSet set;
  set.specs = plan_viewports(cfg);
  set.rasters.resize(set.specs.size());
  parallel_for(set.specs.size(), jobs,
               [&](std::size_t i) { set.rasters[i] = project_viewport(erp, set.specs[i]); });
  return set;
}

NaturalnessFeatures average_features(std::span<const NaturalnessFeatures> per_viewport) {
  if (per_viewport.empty()) throw ValidationError("no feature vectors to average");
  NaturalnessFeatures mean;
  for (const auto& f : per_viewport) {
    for (std::size_t k = 0; k < NaturalnessFeatures::kSize; ++k) mean.values[k] += f.values[k];
  }
  const double m = static_cast<double>(per_viewport.size());
  for (double& v : mean.values) v /= m;
  return mean;
}

LocalNaturalness extract_local_naturalness(const Raster& erp, const ViewportSamplingConfig& cfg,
                                           const NssConfig& nss, unsigned jobs) {
  const auto specs = plan_viewports(cfg);
  std::vector<std::optional<NaturalnessFeatures>> slots(specs.size());
  parallel_for(specs.size(), jobs, [&](std::size_t i) {
    const Raster view = project_viewport(erp, specs[i]);
    try {
      slots[i] = extract_nss(view, nss);
    } catch (const NumericalError&) {
      slots[i].reset();
    }
  });

  std::vector<NaturalnessFeatures> kept;
  kept.reserve(slots.size());
  for (const auto& slot : slots) {
    if (slot) kept.push_back(*slot);
  }
  if (kept.empty()) throw NumericalError("every viewport produced degenerate naturalness statistics");
  LocalNaturalness out;
  out.features = average_features(kept);
  out.viewports_used = kept.size();
  out.viewports_excluded = slots.size() - kept.size();
  return out;
}

std::vector<double> combine_local_global(std::span<const double> local,
                                         std::span<const double> global) {
  if (local.size() != NaturalnessFeatures::kSize || global.size() != NaturalnessFeatures::kSize) {
    throw ValidationError(fmt::format("local/global naturalness must both have {} entries, got {} and {}",
                                      NaturalnessFeatures::kSize, local.size(), global.size()));
  }
  std::vector<double> out(local.begin(), local.end());
  out.insert(out.end(), global.begin(), global.end());
  return out;
}

std::pair<NaturalnessFeatures, NaturalnessFeatures> split_local_global(
    std::span<const double> combined) {
  if (combined.size() != 2 * NaturalnessFeatures::kSize) {
    throw ValidationError(fmt::format("combined naturalness vector must have {} entries, got {}",
                                      2 * NaturalnessFeatures::kSize, combined.size()));
  }
  std::pair<NaturalnessFeatures, NaturalnessFeatures> out;
  std::copy_n(combined.begin(), NaturalnessFeatures::kSize, out.first.values.begin());
  std::copy_n(combined.begin() + NaturalnessFeatures::kSize, NaturalnessFeatures::kSize,
              out.second.values.begin());
  return out;
}

}  // namespace mfilgn
