#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "mfilgn/raster.hpp"

namespace mfilgn {

enum class ImageFormat { kPng, kBmp, kPpm, kPgm, kJpeg };

struct DecodeOptions {
  /// Skip signature sniffing and decode as this format.
  std::optional<ImageFormat> format;
};

/// Sniffs the encoding from leading bytes. Returns nullopt for unknown data.
std::optional<ImageFormat> detect_format(std::span<const std::uint8_t> bytes) noexcept;

/// Decodes an 8-bit image into a luminance raster in [0, 255]. RGB input is
/// converted with BT.601 weights; alpha is ignored; grayscale passes through.
Raster decode_image(std::span<const std::uint8_t> bytes, const DecodeOptions& options = {});

/// Reads and decodes an equirectangular image file.
/// Throws IoError for unreadable or truncated files, FormatError for
/// unsupported encodings and ValidationError for zero-area images.
Raster load_erp(const std::filesystem::path& path, const DecodeOptions& options = {});

/// Writes an 8-bit grayscale PNG; values are rounded and clamped to [0, 255].
void write_png(const std::filesystem::path& path, const Raster& img);

/// Writes a binary (P5) PGM; values are rounded and clamped to [0, 255].
void write_pgm(const std::filesystem::path& path, const Raster& img);

/// Writes an 8-bit RGB binary PPM (P6) from interleaved samples.
void write_ppm_rgb(const std::filesystem::path& path, std::size_t width, std::size_t height,
                   std::span<const std::uint8_t> rgb);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

}  // namespace mfilgn
