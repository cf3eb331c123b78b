#include "mfilgn/wavelet.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <fmt/format.h>

#include "mfilgn/errors.hpp"

namespace mfilgn {

void HaarTransformSpec::validate() const {
  if (levels < 1 || levels > kMaxLevels) {
    throw ValidationError(
        fmt::format("wavelet levels must be in [1, {}], got {}", kMaxLevels, levels));
  }
}

namespace {

SubbandSet analyse_level(const Raster& img, int level) {
  const std::size_t w = img.width() / 2;
  const std::size_t h = img.height() / 2;
  SubbandSet out{Raster(w, h), Raster(w, h), Raster(w, h), Raster(w, h), level};
  // 1/sqrt(2) per tap in each direction -> 1/2 overall.
  for (std::size_t y = 0; y < h; ++y) {
    const auto top = img.row(2 * y);
    const auto bottom = img.row(2 * y + 1);
    for (std::size_t x = 0; x < w; ++x) {
      const double a = top[2 * x];
      const double b = top[2 * x + 1];
      const double c = bottom[2 * x];
      const double d = bottom[2 * x + 1];
      out.ll.at(x, y) = 0.5 * (a + b + c + d);
      out.hl.at(x, y) = 0.5 * (a - b + c - d);
      out.lh.at(x, y) = 0.5 * (a + b - c - d);
      out.hh.at(x, y) = 0.5 * (a - b - c + d);
    }
  }
  return out;
}

}  // namespace

std::vector<SubbandSet> dhwt_decompose(const Raster& img, const HaarTransformSpec& spec) {
  spec.validate();
  const std::size_t min_dim = std::size_t{1} << spec.levels;
  if (img.width() < min_dim || img.height() < min_dim) {
    throw ValidationError(fmt::format("{}x{} image too small for {} Haar level(s)", img.width(),
                                      img.height(), spec.levels));
  }
  std::vector<SubbandSet> levels;
  levels.reserve(static_cast<std::size_t>(spec.levels));
  const Raster* current = &img;
  for (int level = 1; level <= spec.levels; ++level) {
    levels.push_back(analyse_level(*current, level));
    current = &levels.back().ll;
  }
  return levels;
}

Raster dhwt_reconstruct(const SubbandSet& bands) {
  const std::size_t w = bands.ll.width();
  const std::size_t h = bands.ll.height();
  for (const Raster* band : {&bands.hl, &bands.lh, &bands.hh}) {
    if (band->width() != w || band->height() != h) {
      throw ValidationError("subband dimensions differ");
    }
  }
  Raster out(2 * w, 2 * h);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double ll = bands.ll.at(x, y);
      const double hl = bands.hl.at(x, y);
      const double lh = bands.lh.at(x, y);
      const double hh = bands.hh.at(x, y);
      out.at(2 * x, 2 * y) = 0.5 * (ll + hl + lh + hh);
      out.at(2 * x + 1, 2 * y) = 0.5 * (ll - hl + lh - hh);
      out.at(2 * x, 2 * y + 1) = 0.5 * (ll + hl - lh - hh);
      out.at(2 * x + 1, 2 * y + 1) = 0.5 * (ll - hl - lh + hh);
    }
  }
  return out;
}

double subband_entropy(const Raster& band) {
  if (band.empty()) throw ValidationError("entropy of an empty band");
  band.validate_finite();
  const auto values = band.values();
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (hi == lo) return 0.0;

  std::array<std::size_t, 256> histogram{};
  const double scale = 255.0 / (hi - lo);
  for (double v : values) {
    const long bin = std::lround((v - lo) * scale);
    ++histogram[static_cast<std::size_t>(std::clamp(bin, 0L, 255L))];
  }
  const double n = static_cast<double>(values.size());
  double entropy = 0.0;
  for (std::size_t count : histogram) {
    if (count == 0) continue;
    const double p = static_cast<double>(count) / n;
    entropy -= p * std::log2(p);
  }
  return entropy;
}

MfiFeatures extract_mfi(const Raster& img, const HaarTransformSpec& spec) {
  const auto levels = dhwt_decompose(img, spec);
  MfiFeatures out;
  out.entropies.reserve(4 * levels.size());
  for (const auto& set : levels) {
    out.entropies.push_back(subband_entropy(set.ll));
    out.entropies.push_back(subband_entropy(set.hl));
    out.entropies.push_back(subband_entropy(set.lh));
    out.entropies.push_back(subband_entropy(set.hh));
  }
  return out;
}

}  // namespace mfilgn
