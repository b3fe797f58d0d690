#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "nds/core/error.hpp"
#include "nds/core/image.hpp"

namespace nds {

/// Oriented anisotropic Gaussian blend mask parameters, in pixel units.
/// The center may lie outside the image.
struct MaskParams {
  double c_i = 0.0;  // row
  double c_j = 0.0;  // column
  double sigma_i = 1.0;
  double sigma_j = 1.0;
  double angle_deg = 0.0;

  friend bool operator==(const MaskParams&, const MaskParams&) = default;
};

struct RegionMask {
  int height = 0;
  int width = 0;
  std::vector<double> weights;

  double at(int r, int c) const { return weights[static_cast<std::size_t>(r) * width + c]; }

  static RegionMask constant(int height, int width, double value) {
    return {height, width, std::vector<double>(static_cast<std::size_t>(height) * width, value)};
  }
};

/// M(i, j) = exp(-½ (u²/σ_i² + v²/σ_j²)), where (u, v) is the offset
/// (i - c_i, j - c_j) rotated by -angle. Unnormalized: the peak value is 1.
inline RegionMask region_mask(int height, int width, const MaskParams& p) {
  if (!(p.sigma_i > 0.0) || !(p.sigma_j > 0.0)) throw InvalidParameter("region_mask: sigmas must be positive");
  if (height < 1 || width < 1) throw InvalidInput("region_mask: dimensions must be positive");
  const double a = p.angle_deg * std::numbers::pi / 180.0;
  const double cs = std::cos(a);
  const double sn = std::sin(a);
  const double inv_si2 = 1.0 / (p.sigma_i * p.sigma_i);
  const double inv_sj2 = 1.0 / (p.sigma_j * p.sigma_j);
  RegionMask m{height, width, std::vector<double>(static_cast<std::size_t>(height) * width)};
  for (int i = 0; i < height; ++i) {
    const double di = i - p.c_i;
    for (int j = 0; j < width; ++j) {
      const double dj = j - p.c_j;
      const double u = cs * di + sn * dj;
      const double v = -sn * di + cs * dj;
      m.weights[static_cast<std::size_t>(i) * width + j] = std::exp(-0.5 * (u * u * inv_si2 + v * v * inv_sj2));
    }
  }
  return m;
}

/// Evaluates the mask on the fly and blends; identical to
/// blend_region_adaptive(original, degraded, region_mask(h, w, p)).
inline ImageBuffer blend_with_mask(const ImageBuffer& original, const ImageBuffer& degraded, const MaskParams& p) {
  require_same_shape(original, degraded, "blend_with_mask");
  if (!(p.sigma_i > 0.0) || !(p.sigma_j > 0.0)) throw InvalidParameter("region_mask: sigmas must be positive");
  const double a = p.angle_deg * std::numbers::pi / 180.0;
  const double cs = std::cos(a);
  const double sn = std::sin(a);
  const double inv_si2 = 1.0 / (p.sigma_i * p.sigma_i);
  const double inv_sj2 = 1.0 / (p.sigma_j * p.sigma_j);
  const int ch = original.channels();
  ImageBuffer out(original.height(), original.width(), ch);
  for (int i = 0; i < original.height(); ++i) {
    const double di = i - p.c_i;
    const std::size_t row = static_cast<std::size_t>(i) * original.width() * ch;
    const float* o = original.data().data() + row;
    const float* d = degraded.data().data() + row;
    float* dst = out.data().data() + row;
    for (int j = 0; j < original.width(); ++j) {
      const double dj = j - p.c_j;
      const double u = cs * di + sn * dj;
      const double v = -sn * di + cs * dj;
      const double w = std::exp(-0.5 * (u * u * inv_si2 + v * v * inv_sj2));
      for (int c = 0; c < ch; ++c) {
        const int k = j * ch + c;
        dst[k] = static_cast<float>(w * d[k] + (1.0 - w) * o[k]);
      }
    }
  }
  return out;
}

/// out = m * degraded + (1 - m) * original, per pixel and channel.
inline ImageBuffer blend_region_adaptive(const ImageBuffer& original, const ImageBuffer& degraded, const RegionMask& m) {
  require_same_shape(original, degraded, "blend_region_adaptive");
  if (m.height != original.height() || m.width != original.width())
    throw InvalidInput("blend_region_adaptive: mask dimensions differ from image dimensions");
  ImageBuffer out(original.height(), original.width(), original.channels());
  const int ch = original.channels();
  const auto o = original.data();
  const auto d = degraded.data();
  auto dst = out.data();
  for (std::size_t p = 0; p < m.weights.size(); ++p) {
    const double w = m.weights[p];
    for (int c = 0; c < ch; ++c) {
      const std::size_t k = p * ch + c;
      dst[k] = static_cast<float>(w * d[k] + (1.0 - w) * o[k]);
    }
  }
  return out;
}

}  // namespace nds
