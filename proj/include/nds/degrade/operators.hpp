#pragma once

// The pixel-level degradation operators. Each one is range-clamped.

#include <algorithm>
#include <cmath>
#include <vector>

#include "nds/core/error.hpp"
#include "nds/core/filter.hpp"
#include "nds/core/image.hpp"
#include "nds/core/kernel.hpp"
#include "nds/core/rng.hpp"

namespace nds {

/// (img + n) ⊛ splat with n ~ N(0, noise_sigma²) i.i.d. per sample.
/// Noise is drawn in row-major, channel-interleaved order.
inline ImageBuffer splatted_gaussian_noise(const ImageBuffer& img, double noise_sigma, const Kernel2D& splat,
                                           RandomStream& rng) {
  if (noise_sigma < 0.0) throw InvalidParameter("splatted_gaussian_noise: noise sigma must be >= 0");
  ImageBuffer noisy = img;
  for (float& v : noisy.data()) v = static_cast<float>(v + noise_sigma * rng.normal());
  return convolve2d(noisy, splat);
}

struct RepositionStats {
  std::size_t displaced = 0;
  std::size_t total = 0;
};

/// Per pixel draw p ~ U(0, 1]; when p <= prob the pixel is replaced by the
/// one at (i + δi, j + δj), δ ~ U{-max_offset..max_offset}, source clamped
/// to the image. Otherwise it is copied.
inline ImageBuffer reposition(const ImageBuffer& img, double prob, int max_offset, RandomStream& rng,
                              RepositionStats* stats = nullptr) {
  if (prob < 0.0 || prob > 1.0) throw InvalidParameter("reposition: prob must lie in [0, 1]");
  if (max_offset < 0) throw InvalidParameter("reposition: max_offset must be >= 0");
  ImageBuffer out = img;
  std::size_t displaced = 0;
  const int ch = img.channels();
  for (int i = 0; i < img.height(); ++i) {
    for (int j = 0; j < img.width(); ++j) {
      const double p = 1.0 - rng.uniform();
      if (p > prob) continue;
      const auto di = static_cast<int>(rng.uniform_int(-max_offset, max_offset));
      const auto dj = static_cast<int>(rng.uniform_int(-max_offset, max_offset));
      const int si = std::clamp(i + di, 0, img.height() - 1);
      const int sj = std::clamp(j + dj, 0, img.width() - 1);
      for (int c = 0; c < ch; ++c) out.at(i, j, c) = img.at(si, sj, c);
      ++displaced;
    }
  }
  out.clamp01();
  if (stats) *stats = {displaced, static_cast<std::size_t>(img.height()) * img.width()};
  return out;
}

inline ImageBuffer aniso_blur(const ImageBuffer& img, int size, double sigma_major, double sigma_minor,
                              double angle_deg) {
  return convolve2d(img, gaussian_kernel_aniso(size, sigma_major, sigma_minor, angle_deg));
}

/// y = x^γ per sample.
inline ImageBuffer apply_gamma(const ImageBuffer& img, double gamma) {
  if (!(gamma > 0.0)) throw InvalidParameter("gamma must be positive");
  ImageBuffer out = img;
  if (gamma == 1.0) return out;
  const auto g = static_cast<float>(gamma);
  for (float& v : out.data()) v = std::pow(std::clamp(v, 0.0f, 1.0f), g);
  return out;
}

struct JettedViews {
  ImageBuffer target;
  std::vector<ImageBuffer> refs;
};

/// The same γ is applied to the target and every reference view.
inline JettedViews illumination_jetting(const ImageBuffer& target, const std::vector<ImageBuffer>& refs, double gamma) {
  JettedViews out{apply_gamma(target, gamma), {}};
  out.refs.reserve(refs.size());
  for (const auto& r : refs) out.refs.push_back(apply_gamma(r, gamma));
  return out;
}

}  // namespace nds
