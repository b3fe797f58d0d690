#include <gtest/gtest.h>

#include <algorithm>

#include "nds/core/filter.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace nds {
namespace {

TEST(Convolve2d, DeltaKernelIsBitExactIdentity) {
  const auto img = test::random_image(9, 7, 3, 1);
  EXPECT_EQ(convolve2d(img, delta_kernel()), img);
}

TEST(Convolve2d, ConstantImageIsPreserved) {
  const ImageBuffer img(10, 12, 3, 0.37f);
  for (const auto& k : {gaussian_kernel_iso(5, 1.0), gaussian_kernel_aniso(7, 1.2, 0.3, 33.0)}) {
    const auto out = convolve2d(img, k);
    for (const float v : out.data()) EXPECT_NEAR(v, 0.37f, 1e-7);
  }
}

TEST(Convolve2d, MatchesNaiveLoopOn8x8) {
  const auto img = test::random_image(8, 8, 3, 5);
  const auto k = gaussian_kernel_aniso(3, 0.9, 0.5, 60.0);
  EXPECT_LT(test::max_abs_diff(convolve2d(img, k), oracle::naive_convolve(img, k)), 1e-6);
}

TEST(Convolve2d, MatchesNaiveLoopAcrossSizes) {
  std::uint64_t seed = 100;
  for (int h = 1; h <= 16; h += 3)
    for (int w = 1; w <= 16; w += 5)
      for (int size = 1; size <= 7; size += 2) {
        const auto img = test::random_image(h, w, (h + w) % 2 ? 3 : 1, ++seed);
        const auto k = gaussian_kernel_aniso(size, 0.3 + 0.1 * size, 0.8, 15.0 * size);
        EXPECT_LT(test::max_abs_diff(convolve2d(img, k), oracle::naive_convolve(img, k)), 1e-6)
            << h << "x" << w << " k" << size;
      }
}

TEST(Convolve2d, NeverExpandsRange) {
  const auto img = test::random_image(16, 16, 3, 9);
  const auto [lo, hi] = std::minmax_element(img.data().begin(), img.data().end());
  const auto out = convolve2d(img, gaussian_kernel_iso(7, 2.0));
  for (const float v : out.data()) {
    EXPECT_GE(v, *lo - 1e-7f);
    EXPECT_LE(v, *hi + 1e-7f);
  }
}

TEST(BilinearResize, UnitScaleIsIdentity) {
  const auto img = test::random_image(6, 9, 3, 3);
  EXPECT_EQ(bilinear_resize(img, 1.0), img);
}

TEST(BilinearResize, ConstantStaysConstant) {
  const ImageBuffer img(12, 20, 3, 0.61f);
  for (const double s : {0.125, 0.25, 0.7, 1.9}) {
    const auto out = bilinear_resize(img, s);
    for (const float v : out.data()) EXPECT_NEAR(v, 0.61f, 1e-7);
  }
}

TEST(BilinearResize, HalvingRampAveragesPairs) {
  // 4x4 ramp v(r, c) = (4r + c) / 16. With half-pixel centers, output (i, j)
  // samples source (2i + 0.5, 2j + 0.5): the mean of the 2x2 block.
  ImageBuffer img(4, 4, 1);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) img.at(r, c, 0) = (4.0f * r + c) / 16.0f;
  const auto out = bilinear_resize(img, 0.5);
  ASSERT_EQ(out.height(), 2);
  ASSERT_EQ(out.width(), 2);
  EXPECT_FLOAT_EQ(out.at(0, 0, 0), (0 + 1 + 4 + 5) / 64.0f);
  EXPECT_FLOAT_EQ(out.at(0, 1, 0), (2 + 3 + 6 + 7) / 64.0f);
  EXPECT_FLOAT_EQ(out.at(1, 0, 0), (8 + 9 + 12 + 13) / 64.0f);
  EXPECT_FLOAT_EQ(out.at(1, 1, 0), (10 + 11 + 14 + 15) / 64.0f);
}

TEST(BilinearResize, OutputExtentRounds) {
  const ImageBuffer img(256, 448, 3);
  EXPECT_EQ(bilinear_resize(img, 0.25).height(), 64);
  EXPECT_EQ(bilinear_resize(img, 0.125).width(), 56);
  EXPECT_EQ(bilinear_resize(ImageBuffer(3, 3, 1), 0.01).height(), 1);
  EXPECT_THROW(bilinear_resize(img, 0.0), InvalidParameter);
}

}  // namespace
}  // namespace nds
