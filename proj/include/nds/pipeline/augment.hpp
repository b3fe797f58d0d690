#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <utility>

#include "nds/core/error.hpp"
#include "nds/core/image.hpp"
#include "nds/core/rng.hpp"

namespace nds {

/// Content moves by (dy, dx): out(i, j) = img(i - dy, j - dx), source
/// clamped, so vacated rows/columns repeat the border.
inline ImageBuffer shift_image(const ImageBuffer& img, int dy, int dx) {
  ImageBuffer out(img.height(), img.width(), img.channels());
  for (int i = 0; i < img.height(); ++i)
    for (int j = 0; j < img.width(); ++j)
      for (int c = 0; c < img.channels(); ++c) out.at(i, j, c) = img.clamped(i - dy, j - dx, c);
  return out;
}

/// 8 px at 256 px on the short side, scaled linearly and kept below a
/// quarter of the short side.
inline int default_offset_max(int height, int width) {
  const int short_side = std::min(height, width);
  const int scaled = static_cast<int>(std::lround(8.0 * short_side / 256.0));
  return std::clamp(scaled, 0, std::max(0, (short_side - 1) / 4));
}

struct OffsetRefs {
  ImageBuffer ref1, ref2;
  std::array<int, 4> offsets{};  // dy1, dx1, dy2, dx2
};

/// Independent integer offsets in [-max_px, max_px]² per reference, drawn
/// in the order dy1, dx1, dy2, dx2.
inline OffsetRefs augment_global_offsets(const ImageBuffer& ref1, const ImageBuffer& ref2, int max_px, RandomStream& rng) {
  if (max_px < 0) throw InvalidParameter("augment_global_offsets: max_px must be >= 0");
  for (const auto* r : {&ref1, &ref2})
    if (4 * max_px >= std::min(r->height(), r->width()))
      throw InvalidParameter("augment_global_offsets: max_px must be below a quarter of the shorter side");
  OffsetRefs out;
  for (int& o : out.offsets) o = static_cast<int>(rng.uniform_int(-max_px, max_px));
  out.ref1 = shift_image(ref1, out.offsets[0], out.offsets[1]);
  out.ref2 = shift_image(ref2, out.offsets[2], out.offsets[3]);
  return out;
}

}  // namespace nds
