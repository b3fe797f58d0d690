#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "nds/degrade/jpeg.hpp"
#include "test_util.hpp"

namespace nds {
namespace {

std::vector<float> random_plane(int h, int w, std::uint64_t seed) {
  RandomStream rng(seed, StreamId::kTest);
  std::vector<float> p(static_cast<std::size_t>(h) * w);
  for (float& v : p) v = static_cast<float>(255.0 * rng.uniform());
  return p;
}

std::vector<float> smooth_plane(int h, int w) {
  std::vector<float> p(static_cast<std::size_t>(h) * w);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      p[r * w + c] = static_cast<float>(128 + 60 * std::sin(0.2 * r) * std::cos(0.15 * c) + ((r / 8 + c / 8) % 2) * 30);
  return p;
}

double sq_error(const std::vector<float>& a, const std::vector<float>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * static_cast<double>(a[i] - b[i]);
  return s;
}

TEST(QuantTable, IjgScaling) {
  const auto q100 = jpeg::quant_table(100);
  for (const int v : q100) EXPECT_EQ(v, 1);
  EXPECT_EQ(jpeg::quant_table(50), jpeg::kLuminanceBase);
  // quality 20: scale 250, step = (16*250 + 50)/100 = 40
  EXPECT_EQ(jpeg::quant_table(20)[0], 40);
  // quality 90: scale 20, step = (16*20 + 50)/100 = 3
  EXPECT_EQ(jpeg::quant_table(90)[0], 3);
  // quality 1 clamps at 255
  EXPECT_EQ(jpeg::quant_table(1)[63], 255);
  EXPECT_THROW(jpeg::quant_table(0), InvalidParameter);
  EXPECT_THROW(jpeg::quant_table(101), InvalidParameter);
}

TEST(Dct, InverseUndoesForward) {
  RandomStream rng(2, StreamId::kTest);
  jpeg::Block b{};
  for (double& v : b) v = rng.uniform(-128, 127);
  const auto back = jpeg::inverse_dct(jpeg::forward_dct(b));
  for (int i = 0; i < 64; ++i) EXPECT_NEAR(back[i], b[i], 1e-9);
}

TEST(JpegLuma, QualityHundredWithinTwoLevels) {
  // All-ones table: each coefficient moves by at most 0.5.
  const int h = 37, w = 53;
  const auto plane = random_plane(h, w, 3);
  const auto out = jpeg_luma_compress(plane, h, w, 100);
  for (std::size_t i = 0; i < plane.size(); ++i) EXPECT_LE(std::abs(out[i] - plane[i]), 2.0f);
}

TEST(JpegLuma, ConstantBlockReconstructedExactly) {
  for (const float level : {0.0f, 77.0f, 128.0f, 255.0f})
    for (const int q : {20, 50, 90}) {
      const std::vector<float> plane(64, level);
      const auto out = jpeg_luma_compress(plane, 8, 8, q);
      for (const float v : out) EXPECT_NEAR(v, level, 1e-4 + 0.5 * jpeg::quant_table(q)[0] / 8.0) << q;
    }
  // A DC level that is a multiple of the DC step survives bit-for-bit.
  const std::vector<float> plane(64, 128.0f + 16.0f);  // DC coefficient 128 = 8 * 16
  const auto out = jpeg_luma_compress(plane, 8, 8, 50);
  for (const float v : out) EXPECT_NEAR(v, 144.0f, 1e-4);
}

TEST(JpegLuma, ErrorNonIncreasingInQuality) {
  const int h = 64, w = 64;
  const auto plane = smooth_plane(h, w);
  const double e20 = sq_error(jpeg_luma_compress(plane, h, w, 20), plane);
  const double e50 = sq_error(jpeg_luma_compress(plane, h, w, 50), plane);
  const double e90 = sq_error(jpeg_luma_compress(plane, h, w, 90), plane);
  EXPECT_GE(e20, e50);
  EXPECT_GE(e50, e90);
  EXPECT_GT(e20, 0.0);
}

TEST(JpegLuma, PartialEdgeBlocks) {
  const auto plane = random_plane(3, 11, 4);
  const auto out = jpeg_luma_compress(plane, 3, 11, 100);
  ASSERT_EQ(out.size(), plane.size());
  for (std::size_t i = 0; i < plane.size(); ++i) EXPECT_LE(std::abs(out[i] - plane[i]), 2.0f);
}

TEST(JpegLuma, RejectsBadInput) {
  const std::vector<float> plane(64, 0.0f);
  EXPECT_THROW(jpeg_luma_compress(plane, 8, 8, 0), InvalidParameter);
  EXPECT_THROW(jpeg_luma_compress(plane, 8, 9, 50), InvalidInput);
}

TEST(LightnessCompression, QualityHundredNearlyLossless) {
  const auto img = test::textured_image(48, 40, 5);
  EXPECT_LT(test::max_abs_diff(lightness_compression(img, 100), img), 0.02);
}

TEST(LightnessCompression, OnlyLightnessIsTouched) {
  const auto lab = srgb_to_lab(test::textured_image(24, 24, 6));
  const auto out = lightness_compress_lab(lab, 20);
  bool l_changed = false;
  for (int r = 0; r < lab.height; ++r)
    for (int c = 0; c < lab.width; ++c) {
      EXPECT_EQ(out.a(r, c), lab.a(r, c));
      EXPECT_EQ(out.b(r, c), lab.b(r, c));
      l_changed |= out.L(r, c) != lab.L(r, c);
    }
  EXPECT_TRUE(l_changed);
}

TEST(LightnessCompression, LowQualityIsLossy) {
  const auto img = test::textured_image(32, 32, 7);
  EXPECT_GT(test::max_abs_diff(lightness_compression(img, 20), img), 1e-3);
  EXPECT_THROW(lightness_compression(ImageBuffer(8, 8, 1), 50), InvalidInput);
}

}  // namespace
}  // namespace nds
