#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mfilgn/raster.hpp"

namespace mfilgn::testing {

/// Uniform values in [lo, hi).
Raster uniform_raster(std::size_t w, std::size_t h, std::uint64_t seed, double lo = 0.0,
                      double hi = 255.0);

/// I.i.d. Gaussian values, not clamped.
Raster gaussian_raster(std::size_t w, std::size_t h, std::uint64_t seed, double mean, double sigma);

/// Multi-octave value noise with a 1/f amplitude falloff, wrapping
/// horizontally so the ERP seam is continuous. Values span [0, 255].
Raster textured_erp(std::size_t w, std::size_t h, std::uint64_t seed);

/// Separable Gaussian blur, kernel radius ceil(3 sigma), reflect-101 borders.
/// sigma <= 0 returns the input.
Raster gaussian_blur(const Raster& img, double sigma);

/// Adds i.i.d. Gaussian noise.
Raster add_noise(const Raster& img, double sigma, std::uint64_t seed);

/// Rounds to integers and clamps to [0, 255], as 8-bit storage would.
Raster quantize8(const Raster& img);

/// AGGD draws by rejection from the density with a flat envelope on
/// [-10 beta_l, 10 beta_r]; the mass outside is negligible for tau >= 1.
std::vector<double> aggd_samples(std::size_t n, std::uint64_t seed, double tau, double sigma_l,
                                 double sigma_r);

/// Rolls columns right by `shift` (wraps).
Raster roll_columns(const Raster& img, std::ptrdiff_t shift);

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace mfilgn::testing
