#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mfilgn {

/// Single-channel floating-point image grid, row-major.
///
/// The same type carries luminance images (values in [0, source_range]) and
/// derived signed fields such as wavelet subbands or MSCN maps. Use
/// `validate_image()` where the luminance invariant must hold.
class Raster {
 public:
  static constexpr double kDefaultRange = 255.0;

  Raster() = default;
  Raster(std::size_t width, std::size_t height, double fill = 0.0);
  Raster(std::size_t width, std::size_t height, std::vector<double> data,
         double source_range = kDefaultRange);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  double source_range() const noexcept { return source_range_; }

  double& at(std::size_t x, std::size_t y) noexcept { return data_[y * width_ + x]; }
  double at(std::size_t x, std::size_t y) const noexcept { return data_[y * width_ + x]; }

  std::span<double> row(std::size_t y) noexcept { return {data_.data() + y * width_, width_}; }
  std::span<const double> row(std::size_t y) const noexcept {
    return {data_.data() + y * width_, width_};
  }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  /// Throws ValidationError unless the raster is a valid luminance image:
  /// at least 2x2, all values finite and within [0, source_range].
  void validate_image() const;

  /// Throws ValidationError if any value is NaN or infinite.
  void validate_finite() const;

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<double> data_;
  double source_range_ = kDefaultRange;
};

/// Halves each axis by averaging 2x2 blocks. An odd trailing row or column is
/// dropped. Requires width >= 2 and height >= 2.
Raster downsample_half(const Raster& img);

/// BT.601 luma from 8-bit RGB.
constexpr double luminance_bt601(double r, double g, double b) noexcept {
  return 0.299 * r + 0.587 * g + 0.114 * b;
}

/// Index reflection for out-of-range coordinates (mirror about the edge
/// sample, "reflect-101" style: -1 -> 1, n -> n-2). Valid for n >= 2 and
/// |offset| < n.
inline std::ptrdiff_t reflect_index(std::ptrdiff_t i, std::ptrdiff_t n) noexcept {
  if (i < 0) return -i;
  if (i >= n) return 2 * n - 2 - i;
  return i;
}

}  // namespace mfilgn
