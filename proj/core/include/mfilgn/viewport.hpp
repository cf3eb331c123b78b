#pragma once

#include <span>
#include <utility>
#include <vector>

#include "mfilgn/nss.hpp"
#include "mfilgn/raster.hpp"

namespace mfilgn {

/// Latitude-ring sampling plan. Rings sit at 0, +-step, +-2 step, ... up to
/// +-90 degrees with step = 360 / equator_count; the ring at latitude phi
/// holds round(equator_count * cos(phi)) viewports.
struct ViewportSamplingConfig {
  int equator_count_m0 = 8;
  double fov_degrees = 90.0;
  int viewport_size = 256;

  double ring_step_degrees() const { return 360.0 / equator_count_m0; }
  void validate() const;
};

struct ViewportSpec {
  double center_longitude = 0.0;  // degrees, [-180, 180)
  double center_latitude = 0.0;   // degrees, [-90, 90]
  double fov_degrees = 90.0;
  int size = 256;
};

struct ViewportSet {
  std::vector<ViewportSpec> specs;
  std::vector<Raster> rasters;

  std::size_t count() const noexcept { return specs.size(); }
};

struct LatitudeRing {
  double latitude = 0.0;
  int count = 0;
};

/// Rings in emission order: equator, +step, -step, +2 step, -2 step, ...
/// Rings with zero viewports are included here (count 0).
std::vector<LatitudeRing> plan_rings(const ViewportSamplingConfig& cfg);

/// Flattened viewport centres. Each ring starts at longitude 0.
std::vector<ViewportSpec> plan_viewports(const ViewportSamplingConfig& cfg);

/// Rectilinear (gnomonic) view of an equirectangular raster. Column u maps to
/// longitude (u/W - 0.5) * 360 and row v to latitude (0.5 - v/H) * 180, both
/// measured at pixel centres. Bilinear sampling, wrapping horizontally and
/// clamping vertically.
Raster project_viewport(const Raster& erp, const ViewportSpec& spec);

ViewportSet extract_viewports(const Raster& erp, const ViewportSamplingConfig& cfg,
                              unsigned jobs = 1);

/// Arithmetic mean of per-viewport feature vectors.
NaturalnessFeatures average_features(std::span<const NaturalnessFeatures> per_viewport);

struct LocalNaturalness {
  NaturalnessFeatures features;
  std::size_t viewports_used = 0;
  std::size_t viewports_excluded = 0;
};

/// Samples, projects and fits every viewport, then averages. Viewports whose
/// NSS fit is degenerate are dropped; NumericalError if all of them are.
LocalNaturalness extract_local_naturalness(const Raster& erp, const ViewportSamplingConfig& cfg,
                                           const NssConfig& nss = {}, unsigned jobs = 1);

/// Local-global naturalness vector: local features first (indices 0..35),
/// then global (36..71).
std::vector<double> combine_local_global(std::span<const double> local,
                                         std::span<const double> global);

std::pair<NaturalnessFeatures, NaturalnessFeatures> split_local_global(
    std::span<const double> combined);

}  // namespace mfilgn
