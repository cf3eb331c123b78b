#pragma once

#include <span>
#include <vector>

#include "mfilgn/raster.hpp"

namespace mfilgn {

/// Depth of the dyadic Haar pyramid. Only 1..3 levels are accepted.
struct HaarTransformSpec {
  static constexpr int kMaxLevels = 3;
  int levels = 1;

  void validate() const;
};

/// The four half-resolution subbands of one analysis level. `hl` carries the
/// horizontal detail (column differences), `lh` the vertical detail.
struct SubbandSet {
  Raster ll;
  Raster hl;
  Raster lh;
  Raster hh;
  int level = 1;
};

/// Orthonormal separable 2-tap Haar analysis. Level k+1 recurses on level k's
/// LL band; an odd trailing row/column is dropped before each level.
std::vector<SubbandSet> dhwt_decompose(const Raster& img, const HaarTransformSpec& spec = {});

/// Exact synthesis inverse of one analysis level.
Raster dhwt_reconstruct(const SubbandSet& bands);

/// Shannon entropy (bits) of a band after min-max rescaling to integer bins
/// 0..255. A constant band has zero entropy.
double subband_entropy(const Raster& band);

/// Entropies E_LL, E_HL, E_LH, E_HH per level, level-major.
struct MfiFeatures {
  std::vector<double> entropies;
};

MfiFeatures extract_mfi(const Raster& img, const HaarTransformSpec& spec = {});

}  // namespace mfilgn
