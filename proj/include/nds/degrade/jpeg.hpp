#pragma once

// JPEG-style lossy transfer for a single 8-bit-range channel: 8x8 DCT-II,
// quantization with the baseline luminance table scaled by the IJG quality
// formula, dequantization, inverse DCT. No entropy coding is performed since
// only the lossy part matters here.
//
// IJG quality mapping (jcparam.c):
//   scale = quality < 50 ? 5000 / quality : 200 - 2 * quality
//   step  = clamp((base * scale + 50) / 100, 1, 255)   (integer division)
// quality = 100 therefore gives an all-ones table.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "nds/core/color.hpp"
#include "nds/core/error.hpp"
#include "nds/core/image.hpp"

namespace nds {

namespace jpeg {

// ITU-T T.81 Annex K.1, natural (row-major) order.
inline constexpr std::array<int, 64> kLuminanceBase = {
    16, 11, 10, 16, 24,  40,  51,  61,   //
    12, 12, 14, 19, 26,  58,  60,  55,   //
    14, 13, 16, 24, 40,  57,  69,  56,   //
    14, 17, 22, 29, 51,  87,  80,  62,   //
    18, 22, 37, 56, 68,  109, 103, 77,   //
    24, 35, 55, 64, 81,  104, 113, 92,   //
    49, 64, 78, 87, 103, 121, 120, 101,  //
    72, 92, 95, 98, 112, 100, 103, 99,
};

inline std::array<int, 64> quant_table(int quality) {
  if (quality < 1 || quality > 100) throw InvalidParameter("jpeg quality must lie in [1, 100]");
  const int scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;
  std::array<int, 64> table{};
  for (int i = 0; i < 64; ++i) table[i] = std::clamp((kLuminanceBase[i] * scale + 50) / 100, 1, 255);
  return table;
}

// Orthonormal DCT-II basis, basis[u][x].
inline const std::array<std::array<double, 8>, 8>& dct_basis() {
  static const auto basis = [] {
    std::array<std::array<double, 8>, 8> b{};
    for (int u = 0; u < 8; ++u) {
      const double cu = u == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
      for (int x = 0; x < 8; ++x) b[u][x] = cu * std::cos((2 * x + 1) * u * std::numbers::pi / 16.0);
    }
    return b;
  }();
  return basis;
}

using Block = std::array<double, 64>;

inline Block forward_dct(const Block& in) {
  const auto& b = dct_basis();
  Block tmp{}, out{};
  for (int y = 0; y < 8; ++y)
    for (int u = 0; u < 8; ++u) {
      double s = 0.0;
      for (int x = 0; x < 8; ++x) s += b[u][x] * in[y * 8 + x];
      tmp[y * 8 + u] = s;
    }
  for (int v = 0; v < 8; ++v)
    for (int u = 0; u < 8; ++u) {
      double s = 0.0;
      for (int y = 0; y < 8; ++y) s += b[v][y] * tmp[y * 8 + u];
      out[v * 8 + u] = s;
    }
  return out;
}

inline Block inverse_dct(const Block& in) {
  const auto& b = dct_basis();
  Block tmp{}, out{};
  for (int v = 0; v < 8; ++v)
    for (int x = 0; x < 8; ++x) {
      double s = 0.0;
      for (int u = 0; u < 8; ++u) s += b[u][x] * in[v * 8 + u];
      tmp[v * 8 + x] = s;
    }
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) {
      double s = 0.0;
      for (int v = 0; v < 8; ++v) s += b[v][y] * tmp[v * 8 + x];
      out[y * 8 + x] = s;
    }
  return out;
}

}  // namespace jpeg

/// Compresses a height x width plane of samples in [0, 255]. Partial edge
/// blocks are padded by replication; the padding is discarded afterwards.
inline std::vector<float> jpeg_luma_compress(std::span<const float> plane, int height, int width, int quality) {
  const auto table = jpeg::quant_table(quality);
  if (plane.size() != static_cast<std::size_t>(height) * width)
    throw InvalidInput("jpeg_luma_compress: plane size does not match dimensions");
  std::vector<float> out(plane.size());
  for (int by = 0; by < height; by += 8) {
    for (int bx = 0; bx < width; bx += 8) {
      jpeg::Block block{};
      for (int y = 0; y < 8; ++y) {
        const int sy = std::min(by + y, height - 1);
        for (int x = 0; x < 8; ++x) {
          const int sx = std::min(bx + x, width - 1);
          block[y * 8 + x] = plane[static_cast<std::size_t>(sy) * width + sx] - 128.0;
        }
      }
      jpeg::Block coef = jpeg::forward_dct(block);
      for (int i = 0; i < 64; ++i) coef[i] = std::round(coef[i] / table[i]) * table[i];
      const jpeg::Block rec = jpeg::inverse_dct(coef);
      for (int y = 0; y < 8 && by + y < height; ++y)
        for (int x = 0; x < 8 && bx + x < width; ++x)
          out[static_cast<std::size_t>(by + y) * width + bx + x] =
              static_cast<float>(std::clamp(rec[y * 8 + x] + 128.0, 0.0, 255.0));
    }
  }
  return out;
}

/// Runs the JPEG transfer on L (scaled to [0, 255]) and keeps a/b untouched.
inline LabBuffer lightness_compress_lab(const LabBuffer& lab, int quality) {
  const std::size_t n = static_cast<std::size_t>(lab.height) * lab.width;
  std::vector<float> lightness(n);
  for (std::size_t p = 0; p < n; ++p) lightness[p] = static_cast<float>(lab.lab[p * 3] * (255.0 / 100.0));
  const auto compressed = jpeg_luma_compress(lightness, lab.height, lab.width, quality);
  LabBuffer out = lab;
  for (std::size_t p = 0; p < n; ++p) out.lab[p * 3] = static_cast<float>(compressed[p] * (100.0 / 255.0));
  return out;
}

/// sRGB -> Lab -> JPEG on L -> merge with the original a/b -> sRGB.
inline ImageBuffer lightness_compression(const ImageBuffer& img, int quality) {
  if (img.channels() != 3) throw InvalidInput("lightness_compression: expected a 3-channel image");
  return lab_to_srgb(lightness_compress_lab(srgb_to_lab(img), quality));
}

}  // namespace nds
