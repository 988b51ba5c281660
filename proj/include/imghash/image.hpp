#pragma once

// Grayscale image container and PNG/JPEG decoding.
//
// Samples are stored as doubles in [0, 1]. 8-bit inputs map by v/255; color
// inputs are reduced with BT.601 luma (0.299 R + 0.587 G + 0.114 B) before
// scaling. Alpha is dropped, never composited.

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <jpeglib.h>
#include <png.h>

#include "imghash/errors.hpp"

namespace imghash {

inline constexpr double kLumaR = 0.299;
inline constexpr double kLumaG = 0.587;
inline constexpr double kLumaB = 0.114;

/// Row-major luminance grid with every sample in [0, 1].
class GrayImage {
 public:
  GrayImage() = default;

  /// Constant image. Throws DomainError on a zero dimension.
  GrayImage(int width, int height, double fill = 0.0)
      : width_(width), height_(height) {
    check_dims(width, height);
    pixels_.assign(static_cast<std::size_t>(width) * height,
                   std::clamp(fill, 0.0, 1.0));
  }

  /// Takes ownership of `pixels`; values must already lie in [0, 1].
  GrayImage(int width, int height, std::vector<double> pixels)
      : width_(width), height_(height), pixels_(std::move(pixels)) {
    check_dims(width, height);
    if (pixels_.size() != static_cast<std::size_t>(width) * height)
      throw DomainError("GrayImage: pixel count does not match dimensions");
    for (double v : pixels_)
      if (!(v >= 0.0 && v <= 1.0))
        throw DomainError("GrayImage: sample outside [0, 1]");
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return pixels_.empty(); }

  double operator()(int x, int y) const noexcept {
    return pixels_[static_cast<std::size_t>(y) * width_ + x];
  }
  double& operator()(int x, int y) noexcept {
    return pixels_[static_cast<std::size_t>(y) * width_ + x];
  }

  std::span<const double> pixels() const noexcept { return pixels_; }
  std::span<double> pixels() noexcept { return pixels_; }

  bool operator==(const GrayImage&) const = default;

 private:
  static void check_dims(int w, int h) {
    if (w < 1 || h < 1) throw DomainError("GrayImage: zero dimension");
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> pixels_;
};

/// Nearest 8-bit code of a [0, 1] sample.
inline std::uint8_t to_u8(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

inline double luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  double y = (kLumaR * r + kLumaG * g + kLumaB * b) / 255.0;
  return std::clamp(y, 0.0, 1.0);
}

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  return bytes;
}

namespace detail {

struct JpegErrorManager {
  jpeg_error_mgr pub;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

inline void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

inline void jpeg_silent(j_common_ptr) {}

inline bool is_png(std::span<const std::uint8_t> b) {
  static constexpr std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
  return b.size() >= 8 && std::equal(sig, sig + 8, b.begin());
}

inline bool is_jpeg(std::span<const std::uint8_t> b) {
  return b.size() >= 3 && b[0] == 0xFF && b[1] == 0xD8 && b[2] == 0xFF;
}

}  // namespace detail

inline GrayImage decode_png(std::span<const std::uint8_t> bytes) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size()))
    throw FormatError(std::string("png: ") + png.message);
  if (png.width == 0 || png.height == 0) {
    png_image_free(&png);
    throw FormatError("png: zero dimension");
  }
  const bool color = (png.format & PNG_FORMAT_FLAG_COLOR) != 0;
  png.format = color ? PNG_FORMAT_RGBA : PNG_FORMAT_GA;
  std::vector<std::uint8_t> raw(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, raw.data(), 0, nullptr))
    throw FormatError(std::string("png: ") + png.message);

  const int w = static_cast<int>(png.width), h = static_cast<int>(png.height);
  std::vector<double> pixels(static_cast<std::size_t>(w) * h);
  const std::size_t channels = color ? 4 : 2;
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    const std::uint8_t* p = raw.data() + i * channels;
    pixels[i] = color ? luma(p[0], p[1], p[2]) : p[0] / 255.0;
  }
  return GrayImage(w, h, std::move(pixels));
}

inline GrayImage decode_jpeg(std::span<const std::uint8_t> bytes) {
  jpeg_decompress_struct cinfo{};
  detail::JpegErrorManager jerr{};
  cinfo.err = jpeg_std_error(&jerr.pub);
  jerr.pub.error_exit = detail::jpeg_error_exit;
  jerr.pub.output_message = detail::jpeg_silent;

  std::vector<double> pixels;
  std::vector<std::uint8_t> row;
  if (setjmp(jerr.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw FormatError(std::string("jpeg: ") + jerr.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  const bool gray = cinfo.jpeg_color_space == JCS_GRAYSCALE;
  cinfo.out_color_space = gray ? JCS_GRAYSCALE : JCS_RGB;
  jpeg_start_decompress(&cinfo);

  const int w = static_cast<int>(cinfo.output_width);
  const int h = static_cast<int>(cinfo.output_height);
  const int comps = cinfo.output_components;
  if (w < 1 || h < 1) {
    jpeg_destroy_decompress(&cinfo);
    throw FormatError("jpeg: zero dimension");
  }
  pixels.resize(static_cast<std::size_t>(w) * h);
  row.resize(static_cast<std::size_t>(w) * comps);
  while (cinfo.output_scanline < cinfo.output_height) {
    const auto y = cinfo.output_scanline;
    JSAMPROW rows[1] = {row.data()};
    jpeg_read_scanlines(&cinfo, rows, 1);
    double* out = pixels.data() + static_cast<std::size_t>(y) * w;
    for (int x = 0; x < w; ++x) {
      const std::uint8_t* p = row.data() + static_cast<std::size_t>(x) * comps;
      out[x] = comps == 1 ? p[0] / 255.0 : luma(p[0], p[1], p[2]);
    }
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return GrayImage(w, h, std::move(pixels));
}

/// Encode as 8-bit grayscale baseline JPEG at `quality` (1..100).
inline std::vector<std::uint8_t> encode_jpeg(const GrayImage& img, int quality) {
  if (quality < 1 || quality > 100)
    throw DomainError("jpeg quality must be in 1..100");
  jpeg_compress_struct cinfo{};
  detail::JpegErrorManager jerr{};
  cinfo.err = jpeg_std_error(&jerr.pub);
  jerr.pub.error_exit = detail::jpeg_error_exit;
  jerr.pub.output_message = detail::jpeg_silent;

  unsigned char* buffer = nullptr;
  unsigned long size = 0;
  std::vector<std::uint8_t> row(static_cast<std::size_t>(img.width()));
  if (setjmp(jerr.jump)) {
    jpeg_destroy_compress(&cinfo);
    std::free(buffer);
    throw FormatError(std::string("jpeg encode: ") + jerr.message);
  }
  jpeg_create_compress(&cinfo);
  jpeg_mem_dest(&cinfo, &buffer, &size);
  cinfo.image_width = static_cast<JDIMENSION>(img.width());
  cinfo.image_height = static_cast<JDIMENSION>(img.height());
  cinfo.input_components = 1;
  cinfo.in_color_space = JCS_GRAYSCALE;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, quality, TRUE);
  jpeg_start_compress(&cinfo, TRUE);
  while (cinfo.next_scanline < cinfo.image_height) {
    const int y = static_cast<int>(cinfo.next_scanline);
    for (int x = 0; x < img.width(); ++x) row[static_cast<std::size_t>(x)] = to_u8(img(x, y));
    JSAMPROW rows[1] = {row.data()};
    jpeg_write_scanlines(&cinfo, rows, 1);
  }
  jpeg_finish_compress(&cinfo);
  std::vector<std::uint8_t> out(buffer, buffer + size);
  jpeg_destroy_compress(&cinfo);
  std::free(buffer);
  return out;
}

/// Decode PNG or JPEG bytes, dispatching on the file signature.
inline GrayImage decode_image(std::span<const std::uint8_t> bytes) {
  if (detail::is_png(bytes)) return decode_png(bytes);
  if (detail::is_jpeg(bytes)) return decode_jpeg(bytes);
  throw FormatError("unsupported image format (expected PNG or JPEG)");
}

inline GrayImage load_grayscale(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return decode_image(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

/// Write an 8-bit grayscale PNG (samples rounded to the nearest code).
inline void save_png(const GrayImage& img, const std::filesystem::path& path) {
  std::vector<std::uint8_t> raw(img.pixels().size());
  std::transform(img.pixels().begin(), img.pixels().end(), raw.begin(), to_u8);
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(img.width());
  png.height = static_cast<png_uint_32>(img.height());
  png.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&png, path.string().c_str(), 0, raw.data(), 0, nullptr))
    throw IoError("cannot write " + path.string() + ": " + png.message);
}

}  // namespace imghash
