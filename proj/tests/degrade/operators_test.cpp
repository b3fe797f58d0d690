#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "nds/degrade/operators.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace nds {
namespace {

double channel_variance(const ImageBuffer& img, int ch) {
  double sum = 0.0, sq = 0.0;
  const double n = static_cast<double>(img.height()) * img.width();
  for (int r = 0; r < img.height(); ++r)
    for (int c = 0; c < img.width(); ++c) {
      sum += img.at(r, c, ch);
      sq += img.at(r, c, ch) * static_cast<double>(img.at(r, c, ch));
    }
  return sq / n - (sum / n) * (sum / n);
}

TEST(SplattedNoise, ZeroSigmaDeltaKernelIsIdentity) {
  const auto img = test::random_image(12, 10, 3, 3);
  RandomStream rng(1, StreamId::kSplatNoise);
  EXPECT_EQ(splatted_gaussian_noise(img, 0.0, delta_kernel(), rng), img);
}

TEST(SplattedNoise, MeanOfConstantImageWithinCltBound) {
  // 256*256*3 samples, σ = 0.05: the sample mean has sd ≈ 1.1e-4, so ±0.003
  // is far outside any plausible fluctuation while still catching a bias.
  const ImageBuffer img(256, 256, 3, 0.5f);
  RandomStream rng(77, StreamId::kSplatNoise);
  const auto out = splatted_gaussian_noise(img, 0.05, gaussian_kernel_iso(5, 1.0), rng);
  const double mean = std::accumulate(out.data().begin(), out.data().end(), 0.0) / static_cast<double>(out.size());
  EXPECT_NEAR(mean, 0.5, 0.003);
}

TEST(SplattedNoise, EqualsAddThenConvolveOracle) {
  const auto img = test::random_image(20, 24, 3, 9);
  const auto splat = gaussian_kernel_iso(5, 0.9);
  RandomStream rng(5, StreamId::kSplatNoise);
  const auto out = splatted_gaussian_noise(img, 0.03, splat, rng);

  RandomStream replay(5, StreamId::kSplatNoise);
  ImageBuffer noisy = img;
  for (int r = 0; r < img.height(); ++r)
    for (int c = 0; c < img.width(); ++c)
      for (int k = 0; k < 3; ++k) noisy.at(r, c, k) = static_cast<float>(img.at(r, c, k) + 0.03 * replay.normal());
  EXPECT_EQ(out, oracle::naive_convolve(noisy, splat));
}

TEST(SplattedNoise, RejectsNegativeSigma) {
  RandomStream rng(1, StreamId::kSplatNoise);
  EXPECT_THROW(splatted_gaussian_noise(ImageBuffer(2, 2, 3), -0.1, delta_kernel(), rng), InvalidParameter);
}

TEST(Reposition, ZeroProbabilityIsIdentity) {
  const auto img = test::random_image(30, 30, 3, 2);
  RandomStream rng(3, StreamId::kReposition);
  RepositionStats stats;
  EXPECT_EQ(reposition(img, 0.0, 2, rng, &stats), img);
  EXPECT_EQ(stats.displaced, 0u);
}

TEST(Reposition, ConstantImageUnchanged) {
  const ImageBuffer img(16, 16, 3, 0.3f);
  for (const double prob : {0.1, 0.5, 1.0}) {
    RandomStream rng(4, StreamId::kReposition);
    EXPECT_EQ(reposition(img, prob, 2, rng), img);
  }
}

TEST(Reposition, DisplacementRateMatchesProbability) {
  const auto img = test::random_image(512, 512, 1, 6);
  RandomStream rng(8, StreamId::kReposition);
  RepositionStats stats;
  reposition(img, 0.1, 2, rng, &stats);
  const double rate = static_cast<double>(stats.displaced) / stats.total;
  EXPECT_GE(rate, 0.09);
  EXPECT_LE(rate, 0.11);
}

TEST(Reposition, SourcesStayWithinOffsetWindow) {
  // Pixel values encode their own coordinates, so every output pixel can be
  // traced back to its source.
  const int n = 40;
  ImageBuffer img(n, n, 3);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      img.at(r, c, 0) = r / 64.0f;
      img.at(r, c, 1) = c / 64.0f;
    }
  RandomStream rng(12, StreamId::kReposition);
  const auto out = reposition(img, 1.0, 2, rng);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      const int sr = static_cast<int>(std::lround(out.at(r, c, 0) * 64.0f));
      const int sc = static_cast<int>(std::lround(out.at(r, c, 1) * 64.0f));
      EXPECT_LE(std::abs(sr - r), 2);
      EXPECT_LE(std::abs(sc - c), 2);
    }
}

TEST(Reposition, RejectsBadParameters) {
  RandomStream rng(1, StreamId::kReposition);
  EXPECT_THROW(reposition(ImageBuffer(2, 2, 3), 1.5, 2, rng), InvalidParameter);
  EXPECT_THROW(reposition(ImageBuffer(2, 2, 3), 0.1, -1, rng), InvalidParameter);
}

TEST(AnisoBlur, TinySigmasApproachIdentity) {
  const auto img = test::random_image(16, 16, 3, 10);
  EXPECT_LT(test::max_abs_diff(aniso_blur(img, 5, 0.05, 0.05, 30.0), img), 1e-3);
}

TEST(AnisoBlur, ConstantImageUnchanged) {
  const ImageBuffer img(9, 9, 3, 0.8f);
  const auto out = aniso_blur(img, 7, 1.2, 0.2, 100.0);
  for (const float v : out.data()) EXPECT_NEAR(v, 0.8f, 1e-7);
}

TEST(AnisoBlur, ReducesVariance) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto img = test::textured_image(32, 48, seed);
    const auto out = aniso_blur(img, 5, 1.0, 0.4, 20.0 * seed);
    for (int ch = 0; ch < 3; ++ch) EXPECT_LT(channel_variance(out, ch), channel_variance(img, ch));
  }
}

TEST(IlluminationJetting, UnitGammaIsIdentity) {
  const auto img = test::random_image(8, 8, 3, 1);
  const auto ref = test::random_image(8, 8, 3, 2);
  const auto out = illumination_jetting(img, {ref, ref}, 1.0);
  EXPECT_EQ(out.target, img);
  EXPECT_EQ(out.refs.at(1), ref);
}

TEST(IlluminationJetting, FixedPointsAndScalarOracle) {
  ImageBuffer img(1, 3, 1);
  img.at(0, 0, 0) = 0.0f;
  img.at(0, 1, 0) = 1.0f;
  img.at(0, 2, 0) = 0.25f;
  for (const double g : {0.95, 1.05, 2.0}) {
    const auto out = apply_gamma(img, g);
    EXPECT_EQ(out.at(0, 0, 0), 0.0f);
    EXPECT_EQ(out.at(0, 1, 0), 1.0f);
  }
  // 0.25^1.05 = exp(1.05 ln 0.25)
  EXPECT_NEAR(apply_gamma(img, 1.05).at(0, 2, 0), std::exp(1.05 * std::log(0.25)), 1e-7);
}

TEST(IlluminationJetting, SharedGammaOnAllViews) {
  const auto img = test::random_image(6, 6, 3, 3);
  const auto out = illumination_jetting(img, {img, img}, 0.97);
  EXPECT_EQ(out.refs.at(0), out.target);
  EXPECT_EQ(out.refs.at(1), out.target);
}

TEST(IlluminationJetting, RejectsNonPositiveGamma) {
  EXPECT_THROW(apply_gamma(ImageBuffer(1, 1, 3), 0.0), InvalidParameter);
  EXPECT_THROW(illumination_jetting(ImageBuffer(1, 1, 3), {}, -1.0), InvalidParameter);
}

}  // namespace
}  // namespace nds
