#include "mfilgn/raster.hpp"

#include <cmath>
#include <string>

#include <fmt/format.h>

#include "mfilgn/errors.hpp"

namespace mfilgn {

Raster::Raster(std::size_t width, std::size_t height, double fill)
    : width_(width), height_(height), data_(width * height, fill) {}

Raster::Raster(std::size_t width, std::size_t height, std::vector<double> data,
               double source_range)
    : width_(width), height_(height), data_(std::move(data)), source_range_(source_range) {
  if (data_.size() != width_ * height_) {
    throw ValidationError(fmt::format("raster data length {} does not match {}x{}", data_.size(),
                                      width_, height_));
  }
}

void Raster::validate_finite() const {
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      throw ValidationError(fmt::format("non-finite raster value at index {}", i));
    }
  }
}

void Raster::validate_image() const {
  if (width_ < 2 || height_ < 2) {
    throw ValidationError(fmt::format("image must be at least 2x2, got {}x{}", width_, height_));
  }
  for (std::size_t i = 0; i < data_.size(); ++i) {
    const double v = data_[i];
    if (!std::isfinite(v) || v < 0.0 || v > source_range_) {
      throw ValidationError(
          fmt::format("image value {} at index {} outside [0, {}]", v, i, source_range_));
    }
  }
}

Raster downsample_half(const Raster& img) {
  if (img.width() < 2 || img.height() < 2) {
    throw ValidationError(
        fmt::format("downsample_half needs at least 2x2, got {}x{}", img.width(), img.height()));
  }
  const std::size_t w = img.width() / 2;
  const std::size_t h = img.height() / 2;
  std::vector<double> out(w * h);
  for (std::size_t y = 0; y < h; ++y) {
    const auto top = img.row(2 * y);
    const auto bottom = img.row(2 * y + 1);
    for (std::size_t x = 0; x < w; ++x) {
      out[y * w + x] = 0.25 * (top[2 * x] + top[2 * x + 1] + bottom[2 * x] + bottom[2 * x + 1]);
    }
  }
  return Raster(w, h, std::move(out), img.source_range());
}

}  // namespace mfilgn
