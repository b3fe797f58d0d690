#pragma once

// 8-bit PNG / binary PPM (P6) I/O. Conversion is value/255 on read and
// round(value*255) on write, nothing else.

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "nds/core/error.hpp"
#include "nds/core/image.hpp"

namespace nds {

inline std::uint8_t to_u8(float v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

inline std::vector<std::uint8_t> to_bytes(const ImageBuffer& img) {
  std::vector<std::uint8_t> out(img.size());
  std::transform(img.data().begin(), img.data().end(), out.begin(), to_u8);
  return out;
}

inline ImageBuffer from_bytes(int height, int width, int channels, const std::uint8_t* bytes) {
  ImageBuffer img(height, width, channels);
  auto d = img.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = static_cast<float>(bytes[i]) / 255.0f;
  return img;
}

/// Snap to the 8-bit grid without a file round trip.
inline ImageBuffer quantize8(const ImageBuffer& img) {
  const auto bytes = to_bytes(img);
  return from_bytes(img.height(), img.width(), img.channels(), bytes.data());
}

namespace detail {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw IoError("cannot open " + path.string());
  return f;
}

[[noreturn]] inline void png_error_fn(png_structp, png_const_charp msg) { throw IoError(std::string("libpng: ") + msg); }
inline void png_warning_fn(png_structp, png_const_charp) {}

}  // namespace detail

inline ImageBuffer read_png(const std::filesystem::path& path) {
  auto file = detail::open_file(path, "rb");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, detail::png_error_fn, detail::png_warning_fn);
  if (!png) throw IoError("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* p;
    png_infop* i;
    ~Guard() { png_destroy_read_struct(p, i, nullptr); }
  } guard{&png, &info};

  png_init_io(png, file.get());
  png_read_info(png, info);
  const int bit_depth = png_get_bit_depth(png, info);
  const int color_type = png_get_color_type(png, info);
  if (bit_depth == 16) png_set_strip_16(png);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color_type & PNG_COLOR_MASK_ALPHA || png_get_valid(png, info, PNG_INFO_tRNS)) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const int width = static_cast<int>(png_get_image_width(png, info));
  const int height = static_cast<int>(png_get_image_height(png, info));
  const int channels = png_get_channels(png, info);
  if (channels != 1 && channels != 3) throw IoError("unsupported PNG channel layout in " + path.string());

  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(width) * height * channels);
  std::vector<png_bytep> rows(height);
  for (int r = 0; r < height; ++r) rows[r] = bytes.data() + static_cast<std::size_t>(r) * width * channels;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  return from_bytes(height, width, channels, bytes.data());
}

inline void write_png(const std::filesystem::path& path, const ImageBuffer& img) {
  auto file = detail::open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, detail::png_error_fn, detail::png_warning_fn);
  if (!png) throw IoError("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* p;
    png_infop* i;
    ~Guard() { png_destroy_write_struct(p, i); }
  } guard{&png, &info};

  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()), static_cast<png_uint_32>(img.height()), 8,
               img.channels() == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  auto bytes = to_bytes(img);
  std::vector<png_bytep> rows(img.height());
  for (int r = 0; r < img.height(); ++r)
    rows[r] = bytes.data() + static_cast<std::size_t>(r) * img.width() * img.channels();
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
}

inline ImageBuffer read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string magic;
  in >> magic;
  if (magic != "P6") throw IoError(path.string() + ": not a binary PPM (P6)");
  auto next_int = [&]() {
    int value = 0;
    for (;;) {
      in >> std::ws;
      if (in.peek() == '#') {
        std::string comment;
        std::getline(in, comment);
        continue;
      }
      if (!(in >> value)) throw IoError(path.string() + ": malformed PPM header");
      return value;
    }
  };
  const int width = next_int();
  const int height = next_int();
  const int maxval = next_int();
  if (maxval != 255) throw IoError(path.string() + ": only 8-bit PPM is supported");
  in.get();
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(width) * height * 3);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!in) throw IoError(path.string() + ": truncated PPM data");
  return from_bytes(height, width, 3, bytes.data());
}

inline void write_ppm(const std::filesystem::path& path, const ImageBuffer& img) {
  if (img.channels() != 3) throw InvalidInput("write_ppm: expected a 3-channel image");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string());
  out << "P6\n" << img.width() << ' ' << img.height() << "\n255\n";
  const auto bytes = to_bytes(img);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline bool is_image_path(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".ppm";
}

/// Dispatches on extension (.png / .ppm).
inline ImageBuffer read_image(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".png") return read_png(path);
  if (ext == ".ppm") return read_ppm(path);
  throw IoError("unsupported image format: " + path.string());
}

inline void write_image(const std::filesystem::path& path, const ImageBuffer& img) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".png") return write_png(path, img);
  if (ext == ".ppm") return write_ppm(path, img);
  throw IoError("unsupported image format: " + path.string());
}

/// Gray images are promoted to RGB.
inline ImageBuffer read_rgb(const std::filesystem::path& path) {
  ImageBuffer img = read_image(path);
  if (img.channels() == 3) return img;
  ImageBuffer rgb(img.height(), img.width(), 3);
  for (int r = 0; r < img.height(); ++r)
    for (int c = 0; c < img.width(); ++c)
      for (int k = 0; k < 3; ++k) rgb.at(r, c, k) = img.at(r, c, 0);
  return rgb;
}

}  // namespace nds
