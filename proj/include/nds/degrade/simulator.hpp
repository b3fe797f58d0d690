#pragma once

#include <vector>

#include "nds/core/error.hpp"
#include "nds/core/image.hpp"
#include "nds/core/kernel.hpp"
#include "nds/core/rng.hpp"
#include "nds/degrade/jpeg.hpp"
#include "nds/degrade/mask.hpp"
#include "nds/degrade/operators.hpp"
#include "nds/degrade/recipe.hpp"

namespace nds {

struct DegradeResult {
  ImageBuffer degraded;
  std::vector<ImageBuffer> refs;
};

/// Runs the stages in recipe.order. Illumination jetting acts on the target
/// and both references with a shared gamma and is not masked; every other
/// stage acts on the target only and is blended through its own region mask.
/// Random draws come from per-stage streams of recipe.seed, so the result is
/// a pure function of (target, refs, recipe).
inline DegradeResult degrade(const ImageBuffer& target, const std::vector<ImageBuffer>& refs,
                             const DegradationRecipe& recipe) {
  validate_recipe(recipe);
  if (target.channels() != 3) throw InvalidInput("degrade: target must be a 3-channel image");
  if (refs.size() != 2) throw InvalidInput("degrade: exactly two reference views are required");
  for (const auto& r : refs) require_same_shape(target, r, "degrade: reference view");

  DegradeResult out{target, refs};
  out.degraded.clamp01();

  auto masked = [&](const ImageBuffer& degraded, const MaskParams& mp) {
    return blend_with_mask(out.degraded, degraded, mp);
  };

  for (const Stage stage : recipe.order) {
    switch (stage) {
      case Stage::kIlluminationJetting: {
        auto jetted = illumination_jetting(out.degraded, out.refs, recipe.ij.gamma);
        out.degraded = std::move(jetted.target);
        out.refs = std::move(jetted.refs);
        break;
      }
      case Stage::kSplattedNoise: {
        RandomStream rng(recipe.seed, StreamId::kSplatNoise);
        const auto splat = gaussian_kernel_iso(recipe.sgn.splat_kernel_size, recipe.sgn.splat_sigma);
        out.degraded = masked(splatted_gaussian_noise(out.degraded, recipe.sgn.noise_sigma, splat, rng), recipe.sgn.mask);
        break;
      }
      case Stage::kReposition: {
        RandomStream rng(recipe.seed, StreamId::kReposition);
        out.degraded =
            masked(reposition(out.degraded, recipe.repos.prob, recipe.repos.max_offset, rng), recipe.repos.mask);
        break;
      }
      case Stage::kAnisoBlur: {
        const auto& b = recipe.ablur;
        out.degraded = masked(aniso_blur(out.degraded, b.size, b.sigma_major, b.sigma_minor, b.angle_deg), b.mask);
        break;
      }
      case Stage::kLightnessCompression: {
        out.degraded = masked(lightness_compression(out.degraded, recipe.lc.quality), recipe.lc.mask);
        break;
      }
    }
  }
  out.degraded.clamp01();
  return out;
}

/// A recipe whose every stage is the identity (γ = 1, no noise, no
/// displacement, delta blur, quality 100, zero masks).
inline DegradationRecipe identity_recipe(std::uint64_t seed = 0) {
  DegradationRecipe r;
  r.seed = seed;
  const MaskParams far_away{-1e6, -1e6, 1.0, 1.0, 0.0};
  r.sgn = {0.0, 1, 1.0, far_away};
  r.repos = {0.0, 0, far_away};
  r.ablur = {1, 0.0, 1e-3, 1e-3, far_away};
  r.ij.gamma = 1.0;
  r.lc = {100, far_away};
  return r;
}

}  // namespace nds
