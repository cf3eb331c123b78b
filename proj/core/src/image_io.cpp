#include "mfilgn/image_io.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include <fmt/format.h>
#include <png.h>

#ifdef MFILGN_HAVE_JPEG
#include <jpeglib.h>
#endif

#include "mfilgn/errors.hpp"

namespace mfilgn {
namespace {

constexpr std::uint8_t kPngSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

/// Interleaved 8-bit pixels as produced by a decoder, before luma conversion.
struct DecodedPixels {
  std::size_t width = 0;
  std::size_t height = 0;
  int channels = 0;  // 1 or 3
  std::vector<std::uint8_t> samples;
};

Raster to_luminance(const DecodedPixels& px) {
  if (px.width == 0 || px.height == 0) {
    throw ValidationError("image has zero area");
  }
  std::vector<double> data(px.width * px.height);
  if (px.channels == 1) {
    std::transform(px.samples.begin(), px.samples.end(), data.begin(),
                   [](std::uint8_t v) { return static_cast<double>(v); });
  } else {
    for (std::size_t i = 0; i < data.size(); ++i) {
      const std::uint8_t* p = &px.samples[3 * i];
      data[i] = luminance_bt601(p[0], p[1], p[2]);
    }
  }
  return Raster(px.width, px.height, std::move(data));
}

// ---------------------------------------------------------------------------
// PNG

struct PngReadCursor {
  std::span<const std::uint8_t> bytes;
  std::size_t offset = 0;
};

void png_read_from_span(png_structp png, png_bytep out, png_size_t length) {
  auto* cursor = static_cast<PngReadCursor*>(png_get_io_ptr(png));
  if (cursor->offset + length > cursor->bytes.size()) {
    png_error(png, "truncated PNG stream");
  }
  std::memcpy(out, cursor->bytes.data() + cursor->offset, length);
  cursor->offset += length;
}

struct PngFailure {
  std::string message;
};

[[noreturn]] void png_throw_error(png_structp png, png_const_charp message) {
  auto* failure = static_cast<PngFailure*>(png_get_error_ptr(png));
  failure->message = message;
  png_longjmp(png, 1);
}

void png_ignore_warning(png_structp, png_const_charp) {}

DecodedPixels decode_png(std::span<const std::uint8_t> bytes) {
  PngFailure failure;
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, &failure, png_throw_error, png_ignore_warning);
  if (png == nullptr) throw IoError("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("png_create_info_struct failed");
  }

  PngReadCursor cursor{bytes, 0};
  DecodedPixels px;
  std::vector<png_bytep> rows;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("PNG decode failed: " + failure.message);
  }

  png_set_read_fn(png, &cursor, png_read_from_span);
  png_read_info(png, info);

  const png_byte color_type = png_get_color_type(png, info);
  const png_byte bit_depth = png_get_bit_depth(png, info);
  if (bit_depth == 16) png_set_strip_16(png);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  px.width = png_get_image_width(png, info);
  px.height = png_get_image_height(png, info);
  px.channels = png_get_channels(png, info);
  if (px.channels != 1 && px.channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError(fmt::format("unsupported PNG channel count {}", px.channels));
  }
  px.samples.resize(px.width * px.height * static_cast<std::size_t>(px.channels));
  rows.resize(px.height);
  for (std::size_t y = 0; y < px.height; ++y) {
    rows[y] = px.samples.data() + y * px.width * static_cast<std::size_t>(px.channels);
  }
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return px;
}

// ---------------------------------------------------------------------------
// BMP (uncompressed 8/24/32 bpp)

std::uint32_t le32(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) |
         (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

std::uint16_t le16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

DecodedPixels decode_bmp(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 54) throw IoError("truncated BMP header");
  const std::uint32_t pixel_offset = le32(bytes, 10);
  const std::uint32_t header_size = le32(bytes, 14);
  if (header_size < 40) throw FormatError("unsupported BMP header version");
  const auto raw_width = static_cast<std::int32_t>(le32(bytes, 18));
  const auto raw_height = static_cast<std::int32_t>(le32(bytes, 22));
  const std::uint16_t bpp = le16(bytes, 28);
  const std::uint32_t compression = le32(bytes, 30);
  if (compression != 0 && !(compression == 3 && bpp == 32)) {
    throw FormatError(fmt::format("compressed BMP (method {}) not supported", compression));
  }
  if (bpp != 8 && bpp != 24 && bpp != 32) {
    throw FormatError(fmt::format("unsupported BMP bit depth {}", bpp));
  }
  if (raw_width <= 0 || raw_height == 0) throw ValidationError("image has zero area");

  const bool top_down = raw_height < 0;
  DecodedPixels px;
  px.width = static_cast<std::size_t>(raw_width);
  px.height = static_cast<std::size_t>(top_down ? -static_cast<std::int64_t>(raw_height)
                                                : raw_height);
  px.channels = 3;

  std::vector<std::array<std::uint8_t, 3>> palette;
  if (bpp == 8) {
    std::uint32_t colors = le32(bytes, 46);
    if (colors == 0) colors = 256;
    const std::size_t table = 14 + header_size;
    if (table + 4 * static_cast<std::size_t>(colors) > bytes.size()) {
      throw IoError("truncated BMP palette");
    }
    palette.resize(colors);
    for (std::uint32_t i = 0; i < colors; ++i) {
      const std::size_t at = table + 4 * i;
      palette[i] = {bytes[at + 2], bytes[at + 1], bytes[at]};
    }
  }

  const std::size_t stride = ((px.width * bpp + 31) / 32) * 4;
  if (pixel_offset + stride * px.height > bytes.size()) throw IoError("truncated BMP pixel data");

  px.samples.resize(px.width * px.height * 3);
  for (std::size_t y = 0; y < px.height; ++y) {
    const std::size_t src_row = top_down ? y : px.height - 1 - y;
    const std::uint8_t* src = bytes.data() + pixel_offset + src_row * stride;
    std::uint8_t* dst = px.samples.data() + y * px.width * 3;
    for (std::size_t x = 0; x < px.width; ++x) {
      if (bpp == 8) {
        const std::uint8_t index = src[x];
        if (index >= palette.size()) throw FormatError("BMP palette index out of range");
        std::copy(palette[index].begin(), palette[index].end(), dst + 3 * x);
      } else {
        const std::size_t step = bpp / 8;
        dst[3 * x + 0] = src[step * x + 2];
        dst[3 * x + 1] = src[step * x + 1];
        dst[3 * x + 2] = src[step * x + 0];
      }
    }
  }
  return px;
}

// ---------------------------------------------------------------------------
// Binary PNM (P5 / P6)

class PnmHeaderReader {
 public:
  explicit PnmHeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes), pos_(2) {}

  std::size_t next_number() {
    skip_space_and_comments();
    if (pos_ >= bytes_.size()) throw IoError("truncated PNM header");
    if (!std::isdigit(bytes_[pos_])) throw FormatError("malformed PNM header");
    std::size_t value = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + static_cast<std::size_t>(bytes_[pos_] - '0');
      if (value > (1u << 30)) throw FormatError("PNM header value too large");
      ++pos_;
    }
    return value;
  }

  /// Offset of the first raster byte (after exactly one whitespace byte).
  std::size_t raster_offset() const { return pos_ + 1; }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_;
};

DecodedPixels decode_pnm(std::span<const std::uint8_t> bytes, int channels) {
  PnmHeaderReader header(bytes);
  DecodedPixels px;
  px.width = header.next_number();
  px.height = header.next_number();
  const std::size_t maxval = header.next_number();
  if (maxval == 0 || maxval > 255) {
    throw FormatError(fmt::format("PNM maxval {} unsupported (8-bit only)", maxval));
  }
  if (px.width == 0 || px.height == 0) throw ValidationError("image has zero area");
  px.channels = channels;
  const std::size_t count = px.width * px.height * static_cast<std::size_t>(channels);
  const std::size_t offset = header.raster_offset();
  if (offset > bytes.size() || bytes.size() - offset < count) {
    throw IoError("truncated PNM raster");
  }
  px.samples.assign(bytes.begin() + static_cast<std::ptrdiff_t>(offset),
                    bytes.begin() + static_cast<std::ptrdiff_t>(offset + count));
  if (maxval != 255) {
    for (auto& s : px.samples) {
      s = static_cast<std::uint8_t>(std::lround(255.0 * std::min<std::size_t>(s, maxval) /
                                                static_cast<double>(maxval)));
    }
  }
  return px;
}

// ---------------------------------------------------------------------------
// JPEG

#ifdef MFILGN_HAVE_JPEG
struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

DecodedPixels decode_jpeg(std::span<const std::uint8_t> bytes) {
  jpeg_decompress_struct cinfo{};
  JpegErrorManager err{};
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  DecodedPixels px;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw IoError(std::string("JPEG decode failed: ") + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = cinfo.num_components == 1 ? JCS_GRAYSCALE : JCS_RGB;
  jpeg_start_decompress(&cinfo);
  px.width = cinfo.output_width;
  px.height = cinfo.output_height;
  px.channels = cinfo.output_components;
  px.samples.resize(px.width * px.height * static_cast<std::size_t>(px.channels));
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = px.samples.data() +
                   cinfo.output_scanline * px.width * static_cast<std::size_t>(px.channels);
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return px;
}
#endif

std::uint8_t to_byte(double v) {
  if (!std::isfinite(v)) return 0;
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

std::optional<ImageFormat> detect_format(std::span<const std::uint8_t> bytes) noexcept {
  if (bytes.size() >= 8 && std::equal(std::begin(kPngSignature), std::end(kPngSignature),
                                      bytes.begin())) {
    return ImageFormat::kPng;
  }
  if (bytes.size() >= 2 && bytes[0] == 'B' && bytes[1] == 'M') return ImageFormat::kBmp;
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') return ImageFormat::kPpm;
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5') return ImageFormat::kPgm;
  if (bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF) {
    return ImageFormat::kJpeg;
  }
  return std::nullopt;
}

Raster decode_image(std::span<const std::uint8_t> bytes, const DecodeOptions& options) {
  if (bytes.empty()) throw IoError("empty image stream");
  const auto format = options.format ? options.format : detect_format(bytes);
  if (!format) throw FormatError("unrecognised image encoding");
  switch (*format) {
    case ImageFormat::kPng:
      return to_luminance(decode_png(bytes));
    case ImageFormat::kBmp:
      return to_luminance(decode_bmp(bytes));
    case ImageFormat::kPpm:
      return to_luminance(decode_pnm(bytes, 3));
    case ImageFormat::kPgm:
      return to_luminance(decode_pnm(bytes, 1));
    case ImageFormat::kJpeg:
#ifdef MFILGN_HAVE_JPEG
      return to_luminance(decode_jpeg(bytes));
#else
      throw FormatError("JPEG support not compiled in");
#endif
  }
  throw FormatError("unrecognised image encoding");
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  return bytes;
}

Raster load_erp(const std::filesystem::path& path, const DecodeOptions& options) {
  const auto bytes = read_file_bytes(path);
  try {
    return decode_image(bytes, options);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kIo) throw IoError(path.string() + ": " + e.what());
    if (dynamic_cast<const FormatError*>(&e)) throw FormatError(path.string() + ": " + e.what());
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_png(const std::filesystem::path& path, const Raster& img) {
  if (img.empty()) throw ValidationError("cannot write an empty raster");
  std::FILE* file = std::fopen(path.c_str(), "wb");
  if (file == nullptr) throw IoError("cannot open for writing: " + path.string());

  PngFailure failure;
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, &failure, png_throw_error, png_ignore_warning);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (png == nullptr || info == nullptr) {
    png_destroy_write_struct(&png, &info);
    std::fclose(file);
    throw IoError("libpng initialisation failed");
  }

  std::vector<std::uint8_t> pixels(img.size());
  std::transform(img.values().begin(), img.values().end(), pixels.begin(), to_byte);
  std::vector<png_bytep> rows(img.height());
  for (std::size_t y = 0; y < img.height(); ++y) rows[y] = pixels.data() + y * img.width();

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(file);
    throw IoError("PNG encode failed: " + failure.message);
  }
  png_init_io(png, file);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()),
               static_cast<png_uint_32>(img.height()), 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fclose(file) != 0) throw IoError("close failed: " + path.string());
}

void write_pgm(const std::filesystem::path& path, const Raster& img) {
  const std::string header = fmt::format("P5\n{} {}\n255\n", img.width(), img.height());
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  bytes.reserve(bytes.size() + img.size());
  for (double v : img.values()) bytes.push_back(to_byte(v));
  write_bytes(path, bytes);
}

void write_ppm_rgb(const std::filesystem::path& path, std::size_t width, std::size_t height,
                   std::span<const std::uint8_t> rgb) {
  if (rgb.size() != width * height * 3) throw ValidationError("RGB buffer size mismatch");
  const std::string header = fmt::format("P6\n{} {}\n255\n", width, height);
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  bytes.insert(bytes.end(), rgb.begin(), rgb.end());
  write_bytes(path, bytes);
}

}  // namespace mfilgn
