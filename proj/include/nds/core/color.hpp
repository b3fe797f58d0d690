#pragma once

// sRGB <-> CIELAB (D65 white, IEC 61966-2-1 transfer curve).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "nds/core/error.hpp"
#include "nds/core/image.hpp"

namespace nds {

struct LabBuffer {
  int height = 0;
  int width = 0;
  // Interleaved (L, a, b) per pixel; L in [0, 100] for in-gamut input.
  std::vector<float> lab;

  float& L(int r, int c) { return lab[idx(r, c)]; }
  float& a(int r, int c) { return lab[idx(r, c) + 1]; }
  float& b(int r, int c) { return lab[idx(r, c) + 2]; }
  float L(int r, int c) const { return lab[idx(r, c)]; }
  float a(int r, int c) const { return lab[idx(r, c) + 1]; }
  float b(int r, int c) const { return lab[idx(r, c) + 2]; }

  std::size_t idx(int r, int c) const { return (static_cast<std::size_t>(r) * width + c) * 3; }
};

namespace color {

// sRGB primaries -> XYZ, D65.
inline constexpr double kRgbToXyz[3][3] = {
    {0.4124564, 0.3575761, 0.1804375},
    {0.2126729, 0.7151522, 0.0721750},
    {0.0193339, 0.1191920, 0.9503041},
};
struct Matrix3 {
  double m[3][3];
};

constexpr Matrix3 invert3(const double (&a)[3][3]) {
  const double det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
                     a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
                     a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
  Matrix3 r{};
  r.m[0][0] = (a[1][1] * a[2][2] - a[1][2] * a[2][1]) / det;
  r.m[0][1] = (a[0][2] * a[2][1] - a[0][1] * a[2][2]) / det;
  r.m[0][2] = (a[0][1] * a[1][2] - a[0][2] * a[1][1]) / det;
  r.m[1][0] = (a[1][2] * a[2][0] - a[1][0] * a[2][2]) / det;
  r.m[1][1] = (a[0][0] * a[2][2] - a[0][2] * a[2][0]) / det;
  r.m[1][2] = (a[0][2] * a[1][0] - a[0][0] * a[1][2]) / det;
  r.m[2][0] = (a[1][0] * a[2][1] - a[1][1] * a[2][0]) / det;
  r.m[2][1] = (a[0][1] * a[2][0] - a[0][0] * a[2][1]) / det;
  r.m[2][2] = (a[0][0] * a[1][1] - a[0][1] * a[1][0]) / det;
  return r;
}

// Exact inverse of the forward matrix, so the round trip is not limited by
// the 7-digit published inverse.
inline constexpr Matrix3 kXyzToRgb = invert3(kRgbToXyz);
// Reference white as the image of RGB (1,1,1) so that white maps to a = b = 0.
inline constexpr double kWhite[3] = {
    kRgbToXyz[0][0] + kRgbToXyz[0][1] + kRgbToXyz[0][2],
    kRgbToXyz[1][0] + kRgbToXyz[1][1] + kRgbToXyz[1][2],
    kRgbToXyz[2][0] + kRgbToXyz[2][1] + kRgbToXyz[2][2],
};

// Transfer curves run in single precision: samples are stored as float and
// the double-precision pow dominated the conversion cost.
inline double srgb_decode(double v) {
  return v <= 0.04045 ? v / 12.92 : std::pow(static_cast<float>((v + 0.055) / 1.055), 2.4f);
}

inline double srgb_encode(double v) {
  return v <= 0.0031308 ? 12.92 * v : 1.055 * std::pow(static_cast<float>(v), 1.0f / 2.4f) - 0.055;
}

inline constexpr double kDelta = 6.0 / 29.0;

inline double lab_f(double t) {
  return t > kDelta * kDelta * kDelta ? std::pow(static_cast<float>(t), 1.0f / 3.0f) : t / (3.0 * kDelta * kDelta) + 4.0 / 29.0;
}

inline double lab_f_inv(double t) {
  return t > kDelta ? t * t * t : 3.0 * kDelta * kDelta * (t - 4.0 / 29.0);
}

}  // namespace color

inline LabBuffer srgb_to_lab(const ImageBuffer& img) {
  if (img.channels() != 3) throw InvalidInput("srgb_to_lab: expected a 3-channel image");
  LabBuffer out{img.height(), img.width(), std::vector<float>(img.size())};
  const auto src = img.data();
  for (std::size_t p = 0; p < src.size(); p += 3) {
    const double rgb[3] = {color::srgb_decode(src[p]), color::srgb_decode(src[p + 1]),
                           color::srgb_decode(src[p + 2])};
    double f[3];
    for (int k = 0; k < 3; ++k) {
      const double xyz = color::kRgbToXyz[k][0] * rgb[0] + color::kRgbToXyz[k][1] * rgb[1] +
                         color::kRgbToXyz[k][2] * rgb[2];
      f[k] = color::lab_f(xyz / color::kWhite[k]);
    }
    out.lab[p] = static_cast<float>(116.0 * f[1] - 16.0);
    out.lab[p + 1] = static_cast<float>(500.0 * (f[0] - f[1]));
    out.lab[p + 2] = static_cast<float>(200.0 * (f[1] - f[2]));
  }
  return out;
}

/// Out-of-gamut colours clamp to [0, 1].
inline ImageBuffer lab_to_srgb(const LabBuffer& lab) {
  ImageBuffer out(lab.height, lab.width, 3);
  auto dst = out.data();
  for (std::size_t p = 0; p < dst.size(); p += 3) {
    const double fy = (lab.lab[p] + 16.0) / 116.0;
    const double fx = fy + lab.lab[p + 1] / 500.0;
    const double fz = fy - lab.lab[p + 2] / 200.0;
    const double xyz[3] = {color::kWhite[0] * color::lab_f_inv(fx), color::kWhite[1] * color::lab_f_inv(fy),
                           color::kWhite[2] * color::lab_f_inv(fz)};
    for (int k = 0; k < 3; ++k) {
      const double lin = color::kXyzToRgb.m[k][0] * xyz[0] + color::kXyzToRgb.m[k][1] * xyz[1] +
                         color::kXyzToRgb.m[k][2] * xyz[2];
      dst[p + k] = static_cast<float>(std::clamp(color::srgb_encode(std::clamp(lin, 0.0, 1.0)), 0.0, 1.0));
    }
  }
  return out;
}

}  // namespace nds
