#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "mfilgn/distribution_fit.hpp"
#include "mfilgn/raster.hpp"

namespace mfilgn {

/// Patch-covariance ZCA whitening. The filter is estimated from the image it
/// is applied to; `enabled = false` turns the stage into the identity.
struct ZcaConfig {
  bool enabled = true;
  int patch_size = 5;
  double regularization_epsilon = 1e-4;

  void validate() const;
};

struct MscnConfig {
  int window_radius = 3;
  double gaussian_sigma = 7.0 / 6.0;
  double stability_c = 1.0;

  void validate() const;
};

struct NssConfig {
  ZcaConfig zca;
  MscnConfig mscn;
};

/// Whitening kernel, patch_size x patch_size, row-major.
struct ZcaKernel {
  int size = 0;
  std::vector<double> weights;

  double at(int row, int col) const { return weights[static_cast<std::size_t>(row * size + col)]; }
};

/// Two-scale BRISQUE-style naturalness vector. Per scale:
/// [GGD shape, GGD variance] then, for the H, V, D1, D2 neighbour products,
/// [AGGD mean, shape, left variance, right variance].
struct NaturalnessFeatures {
  static constexpr std::size_t kPerScale = 18;
  static constexpr std::size_t kSize = 2 * kPerScale;
  std::array<double, kSize> values{};
};

/// Estimates the zero-phase whitening kernel from non-overlapping patches of
/// the mean-removed image.
ZcaKernel estimate_zca_kernel(const Raster& img, const ZcaConfig& cfg);

/// Applies the estimated ZCA kernel (reflect-padded). Identity when disabled.
Raster zca_whiten(const Raster& img, const ZcaConfig& cfg);

/// Normalized circularly-symmetric Gaussian window, (2r+1)^2 row-major.
std::vector<double> gaussian_window(const MscnConfig& cfg);

/// Mean-subtracted contrast-normalized coefficients.
Raster mscn(const Raster& img, const MscnConfig& cfg);

enum class NeighbourOrientation { kHorizontal, kVertical, kMainDiagonal, kSecondaryDiagonal };

/// Products of each coefficient with one neighbour, over pixels whose
/// neighbour lies inside the field.
std::vector<double> neighbour_products(const Raster& field, NeighbourOrientation orientation);

/// 18 features of one scale from an already-normalized MSCN field.
std::array<double, NaturalnessFeatures::kPerScale> mscn_scale_features(const Raster& field);

/// Full two-scale extraction: ZCA -> MSCN -> GGD/AGGD fits, at the original
/// resolution and after downsample_half. Throws NumericalError when the MSCN
/// statistics are degenerate (e.g. a constant image).
NaturalnessFeatures extract_nss(const Raster& img, const NssConfig& cfg = {});

}  // namespace mfilgn
