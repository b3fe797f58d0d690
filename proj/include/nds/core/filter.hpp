#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "nds/core/image.hpp"
#include "nds/core/kernel.hpp"

namespace nds {

enum class BorderMode { kReplicate };

/// Per-channel 2-D correlation, replicate borders, output clamped to [0, 1].
inline ImageBuffer convolve2d(const ImageBuffer& img, const Kernel2D& k, BorderMode = BorderMode::kReplicate) {
  const int h = img.height();
  const int w = img.width();
  const int ch = img.channels();
  const int r = k.radius();
  if (k.size == 1 && k.taps[0] == 1.0) {
    ImageBuffer copy = img;
    copy.clamp01();
    return copy;
  }

  // Pad once so the inner loop has no branches.
  const int pw = w + 2 * r;
  const int ph = h + 2 * r;
  std::vector<float> padded(static_cast<std::size_t>(ph) * pw * ch);
  for (int y = 0; y < ph; ++y)
    for (int x = 0; x < pw; ++x)
      for (int c = 0; c < ch; ++c)
        padded[(static_cast<std::size_t>(y) * pw + x) * ch + c] = img.clamped(y - r, x - r, c);

  ImageBuffer out(h, w, ch);
  std::vector<double> acc(static_cast<std::size_t>(w) * ch);
  for (int y = 0; y < h; ++y) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (int ky = 0; ky < k.size; ++ky) {
      const float* row = &padded[static_cast<std::size_t>(y + ky) * pw * ch];
      for (int kx = 0; kx < k.size; ++kx) {
        const double tap = k.at(ky, kx);
        const float* src = row + static_cast<std::size_t>(kx) * ch;
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += tap * src[i];
      }
    }
    float* dst = &out.at(y, 0, 0);
    for (std::size_t i = 0; i < acc.size(); ++i) dst[i] = static_cast<float>(std::clamp(acc[i], 0.0, 1.0));
  }
  return out;
}

/// Output size for a scale factor: max(1, round(n * scale)).
inline int scaled_extent(int n, double scale) {
  return std::max(1, static_cast<int>(std::lround(n * scale)));
}

/// Bilinear resampling with half-pixel centers (align_corners = false):
/// src = (dst + 0.5) * in/out - 0.5, clamped to the valid range. Deterministic.
inline ImageBuffer bilinear_resize(const ImageBuffer& img, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1) throw InvalidParameter("bilinear_resize: output dimensions must be >= 1");
  if (out_h == img.height() && out_w == img.width()) return img;
  const double sy = static_cast<double>(img.height()) / out_h;
  const double sx = static_cast<double>(img.width()) / out_w;

  struct Tap {
    int i0, i1;
    double t;
  };
  auto taps = [](int out_n, int in_n, double scale) {
    std::vector<Tap> result(out_n);
    for (int o = 0; o < out_n; ++o) {
      const double src = std::clamp((o + 0.5) * scale - 0.5, 0.0, static_cast<double>(in_n - 1));
      const int i0 = static_cast<int>(std::floor(src));
      result[o] = {i0, std::min(i0 + 1, in_n - 1), src - i0};
    }
    return result;
  };
  const auto ty = taps(out_h, img.height(), sy);
  const auto tx = taps(out_w, img.width(), sx);

  ImageBuffer out(out_h, out_w, img.channels());
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      for (int c = 0; c < img.channels(); ++c) {
        const double top = (1.0 - tx[x].t) * img.at(ty[y].i0, tx[x].i0, c) + tx[x].t * img.at(ty[y].i0, tx[x].i1, c);
        const double bot = (1.0 - tx[x].t) * img.at(ty[y].i1, tx[x].i0, c) + tx[x].t * img.at(ty[y].i1, tx[x].i1, c);
        out.at(y, x, c) = static_cast<float>((1.0 - ty[y].t) * top + ty[y].t * bot);
      }
    }
  }
  return out;
}

inline ImageBuffer bilinear_resize(const ImageBuffer& img, double scale) {
  if (!(scale > 0.0)) throw InvalidParameter("bilinear_resize: scale must be positive");
  return bilinear_resize(img, scaled_extent(img.height(), scale), scaled_extent(img.width(), scale));
}

}  // namespace nds
