#pragma once

// DegradationRecipe: every random quantity of one degradation run, sampled
// up front so the run can be replayed from the recipe alone.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "nds/core/error.hpp"
#include "nds/core/rng.hpp"
#include "nds/degrade/mask.hpp"

namespace nds {

inline constexpr int kRecipeSchemaVersion = 1;

enum class Stage { kIlluminationJetting, kSplattedNoise, kReposition, kAnisoBlur, kLightnessCompression };

inline constexpr std::array<Stage, 5> kDefaultStageOrder = {
    Stage::kIlluminationJetting, Stage::kSplattedNoise, Stage::kReposition, Stage::kAnisoBlur,
    Stage::kLightnessCompression};

inline std::string_view stage_name(Stage s) {
  switch (s) {
    case Stage::kIlluminationJetting: return "ij";
    case Stage::kSplattedNoise: return "sgn";
    case Stage::kReposition: return "repos";
    case Stage::kAnisoBlur: return "ablur";
    case Stage::kLightnessCompression: return "lc";
  }
  return "?";
}

inline Stage stage_from_name(std::string_view name) {
  for (const Stage s : kDefaultStageOrder)
    if (stage_name(s) == name) return s;
  throw ConfigError("unknown degradation stage '" + std::string(name) + "'");
}

struct SgnParams {
  double noise_sigma = 0.0;
  int splat_kernel_size = 5;
  double splat_sigma = 1.0;
  MaskParams mask;
  friend bool operator==(const SgnParams&, const SgnParams&) = default;
};

struct ReposParams {
  double prob = 0.1;
  int max_offset = 2;
  MaskParams mask;
  friend bool operator==(const ReposParams&, const ReposParams&) = default;
};

struct ABlurParams {
  int size = 3;
  double angle_deg = 0.0;
  double sigma_major = 1.0;
  double sigma_minor = 1.0;
  MaskParams mask;
  friend bool operator==(const ABlurParams&, const ABlurParams&) = default;
};

struct IjParams {
  double gamma = 1.0;
  friend bool operator==(const IjParams&, const IjParams&) = default;
};

struct LcParams {
  int quality = 100;
  MaskParams mask;
  friend bool operator==(const LcParams&, const LcParams&) = default;
};

struct DegradationRecipe {
  std::uint64_t seed = 0;
  SgnParams sgn;
  ReposParams repos;
  ABlurParams ablur;
  IjParams ij;
  LcParams lc;
  std::vector<Stage> order{kDefaultStageOrder.begin(), kDefaultStageOrder.end()};
  friend bool operator==(const DegradationRecipe&, const DegradationRecipe&) = default;
};

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  bool open = false;  // (lo, hi) instead of [lo, hi)
  friend bool operator==(const Range&, const Range&) = default;
};

struct IntRange {
  int lo = 0;
  int hi = 0;  // inclusive
  friend bool operator==(const IntRange&, const IntRange&) = default;
};

/// Sampling ranges. Defaults are the published hyper-parameters; the mask
/// ranges are stated for 128x128 crops (see scale_mask_ranges).
struct RecipeRanges {
  Range noise_sigma{0.01, 0.05};
  int splat_kernel_size = 5;
  Range splat_sigma{0.6, 1.2};
  double repos_prob = 0.1;
  int repos_max_offset = 2;
  std::vector<int> blur_sizes{3, 5, 7};
  Range blur_angle{0.0, 180.0};
  Range blur_sigma{0.2, 1.2};
  Range gamma{0.95, 1.05};
  IntRange quality{20, 90};
  Range mask_center_i{-16.0, 144.0, true};
  Range mask_center_j{-16.0, 144.0, true};
  Range mask_sigma_i{13.0, 25.0, true};
  // The published range (0, 24) admits a zero-width mask; floor at 0.5.
  Range mask_sigma_j{0.5, 24.0};
  Range mask_angle{0.0, 180.0};
  std::vector<Stage> order{kDefaultStageOrder.begin(), kDefaultStageOrder.end()};
  friend bool operator==(const RecipeRanges&, const RecipeRanges&) = default;
};

inline constexpr int kMaskReferenceExtent = 128;

/// Rescales the mask center/sigma ranges from the 128x128 reference frame to
/// an image of the given size. Other ranges are untouched.
inline RecipeRanges scale_mask_ranges(RecipeRanges r, int height, int width) {
  const double si = static_cast<double>(height) / kMaskReferenceExtent;
  const double sj = static_cast<double>(width) / kMaskReferenceExtent;
  const double s = std::sqrt(si * sj);
  r.mask_center_i.lo *= si;
  r.mask_center_i.hi *= si;
  r.mask_center_j.lo *= sj;
  r.mask_center_j.hi *= sj;
  r.mask_sigma_i.lo *= s;
  r.mask_sigma_i.hi *= s;
  r.mask_sigma_j.lo *= s;
  r.mask_sigma_j.hi *= s;
  return r;
}

namespace detail {

inline void check_range(const Range& r, const char* name) {
  const bool empty = r.open ? !(r.lo < r.hi) : !(r.lo <= r.hi);
  if (empty || !std::isfinite(r.lo) || !std::isfinite(r.hi))
    throw ConfigError(std::string("empty or invalid sampling range: ") + name);
}

inline double draw(RandomStream& rng, const Range& r) {
  if (r.lo == r.hi) return r.lo;
  return r.open ? rng.uniform_open(r.lo, r.hi) : rng.uniform(r.lo, r.hi);
}

inline void check_order(const std::vector<Stage>& order) {
  if (order.size() != kDefaultStageOrder.size()) throw ConfigError("stage order must list all five stages once");
  for (const Stage s : kDefaultStageOrder)
    if (std::count(order.begin(), order.end(), s) != 1)
      throw ConfigError("stage order must list all five stages once");
}

}  // namespace detail

inline void validate_ranges(const RecipeRanges& r) {
  detail::check_range(r.noise_sigma, "noise_sigma");
  detail::check_range(r.splat_sigma, "splat_sigma");
  detail::check_range(r.blur_angle, "blur_angle");
  detail::check_range(r.blur_sigma, "blur_sigma");
  detail::check_range(r.gamma, "gamma");
  detail::check_range(r.mask_center_i, "mask_center_i");
  detail::check_range(r.mask_center_j, "mask_center_j");
  detail::check_range(r.mask_sigma_i, "mask_sigma_i");
  detail::check_range(r.mask_sigma_j, "mask_sigma_j");
  detail::check_range(r.mask_angle, "mask_angle");
  if (r.quality.lo > r.quality.hi) throw ConfigError("empty or invalid sampling range: quality");
  if (r.quality.lo < 1 || r.quality.hi > 100) throw ConfigError("quality range must lie within [1, 100]");
  if (r.blur_sizes.empty()) throw ConfigError("empty or invalid sampling range: blur_sizes");
  for (const int s : r.blur_sizes)
    if (s < 1 || s % 2 == 0) throw ConfigError("blur sizes must be positive odd integers");
  if (r.splat_kernel_size < 1 || r.splat_kernel_size % 2 == 0) throw ConfigError("splat kernel size must be odd");
  if (r.noise_sigma.lo < 0.0) throw ConfigError("noise sigma must be non-negative");
  if (r.splat_sigma.lo <= 0.0 || r.blur_sigma.lo <= 0.0 || r.gamma.lo <= 0.0)
    throw ConfigError("sigma and gamma ranges must be positive");
  if (r.mask_sigma_i.lo < 0.0 || r.mask_sigma_j.lo <= 0.0 || (!r.mask_sigma_i.open && r.mask_sigma_i.lo == 0.0))
    throw ConfigError("mask sigma ranges must be positive");
  if (r.repos_prob < 0.0 || r.repos_prob > 1.0) throw ConfigError("repos_prob must lie in [0, 1]");
  if (r.repos_max_offset < 0) throw ConfigError("repos_max_offset must be >= 0");
  detail::check_order(r.order);
}

/// Checks physical admissibility (positive sigmas, odd sizes, ...), not
/// membership in any particular sampling range.
inline void validate_recipe(const DegradationRecipe& r) {
  auto check_mask = [](const MaskParams& m) {
    if (!(m.sigma_i > 0.0) || !(m.sigma_j > 0.0)) throw InvalidParameter("mask sigmas must be positive");
  };
  if (r.sgn.noise_sigma < 0.0) throw InvalidParameter("noise sigma must be >= 0");
  if (r.sgn.splat_kernel_size < 1 || r.sgn.splat_kernel_size % 2 == 0 || !(r.sgn.splat_sigma > 0.0))
    throw InvalidParameter("invalid splat kernel");
  if (r.repos.prob < 0.0 || r.repos.prob > 1.0 || r.repos.max_offset < 0)
    throw InvalidParameter("invalid re-positioning parameters");
  if (r.ablur.size < 1 || r.ablur.size % 2 == 0 || !(r.ablur.sigma_major > 0.0) || !(r.ablur.sigma_minor > 0.0))
    throw InvalidParameter("invalid blur parameters");
  if (!(r.ij.gamma > 0.0)) throw InvalidParameter("gamma must be positive");
  if (r.lc.quality < 1 || r.lc.quality > 100) throw InvalidParameter("quality must lie in [1, 100]");
  check_mask(r.sgn.mask);
  check_mask(r.repos.mask);
  check_mask(r.ablur.mask);
  check_mask(r.lc.mask);
  try {
    detail::check_order(r.order);
  } catch (const ConfigError& e) {
    throw InvalidParameter(e.what());
  }
}

/// Draws a full recipe from `ranges` using the recipe stream of `seed`.
/// Draw order is fixed: sgn, repos, ablur, ij, lc.
inline DegradationRecipe sample_recipe(std::uint64_t seed, const RecipeRanges& ranges = {}) {
  validate_ranges(ranges);
  RandomStream rng(seed, StreamId::kRecipe);
  auto mask = [&] {
    MaskParams m;
    m.c_i = detail::draw(rng, ranges.mask_center_i);
    m.c_j = detail::draw(rng, ranges.mask_center_j);
    m.sigma_i = detail::draw(rng, ranges.mask_sigma_i);
    m.sigma_j = detail::draw(rng, ranges.mask_sigma_j);
    m.angle_deg = detail::draw(rng, ranges.mask_angle);
    return m;
  };

  DegradationRecipe r;
  r.seed = seed;
  r.order = ranges.order;

  r.sgn.noise_sigma = detail::draw(rng, ranges.noise_sigma);
  r.sgn.splat_kernel_size = ranges.splat_kernel_size;
  r.sgn.splat_sigma = detail::draw(rng, ranges.splat_sigma);
  r.sgn.mask = mask();

  r.repos.prob = ranges.repos_prob;
  r.repos.max_offset = ranges.repos_max_offset;
  r.repos.mask = mask();

  const auto pick = rng.uniform_int(0, static_cast<std::int64_t>(ranges.blur_sizes.size()) - 1);
  r.ablur.size = ranges.blur_sizes[static_cast<std::size_t>(pick)];
  r.ablur.angle_deg = detail::draw(rng, ranges.blur_angle);
  r.ablur.sigma_major = detail::draw(rng, ranges.blur_sigma);
  r.ablur.sigma_minor = detail::draw(rng, ranges.blur_sigma);
  r.ablur.mask = mask();

  r.ij.gamma = detail::draw(rng, ranges.gamma);

  r.lc.quality = static_cast<int>(rng.uniform_int(ranges.quality.lo, ranges.quality.hi));
  r.lc.mask = mask();
  return r;
}

// ---------------------------------------------------------------------------
// JSON
//
// Recipe schema (version 1):
// {
//   "schema": 1, "seed": <u64>, "order": ["ij","sgn","repos","ablur","lc"],
//   "sgn":   {"noise_sigma", "splat_kernel_size", "splat_sigma", "mask"},
//   "repos": {"prob", "max_offset", "mask"},
//   "ablur": {"size", "angle_deg", "sigma_major", "sigma_minor", "mask"},
//   "ij":    {"gamma"},
//   "lc":    {"quality", "mask"}
// }
// mask = {"c_i", "c_j", "sigma_i", "sigma_j", "angle_deg"}.
// Doubles are written with round-trip precision.

inline nlohmann::json to_json(const MaskParams& m) {
  return {{"c_i", m.c_i}, {"c_j", m.c_j}, {"sigma_i", m.sigma_i}, {"sigma_j", m.sigma_j}, {"angle_deg", m.angle_deg}};
}

inline MaskParams mask_from_json(const nlohmann::json& j) {
  return {j.at("c_i").get<double>(), j.at("c_j").get<double>(), j.at("sigma_i").get<double>(),
          j.at("sigma_j").get<double>(), j.at("angle_deg").get<double>()};
}

inline nlohmann::json order_to_json(const std::vector<Stage>& order) {
  nlohmann::json arr = nlohmann::json::array();
  for (const Stage s : order) arr.push_back(std::string(stage_name(s)));
  return arr;
}

inline std::vector<Stage> order_from_json(const nlohmann::json& j) {
  std::vector<Stage> order;
  for (const auto& s : j) order.push_back(stage_from_name(s.get<std::string>()));
  return order;
}

inline nlohmann::json to_json(const DegradationRecipe& r) {
  return {
      {"schema", kRecipeSchemaVersion},
      {"seed", r.seed},
      {"order", order_to_json(r.order)},
      {"sgn",
       {{"noise_sigma", r.sgn.noise_sigma},
        {"splat_kernel_size", r.sgn.splat_kernel_size},
        {"splat_sigma", r.sgn.splat_sigma},
        {"mask", to_json(r.sgn.mask)}}},
      {"repos", {{"prob", r.repos.prob}, {"max_offset", r.repos.max_offset}, {"mask", to_json(r.repos.mask)}}},
      {"ablur",
       {{"size", r.ablur.size},
        {"angle_deg", r.ablur.angle_deg},
        {"sigma_major", r.ablur.sigma_major},
        {"sigma_minor", r.ablur.sigma_minor},
        {"mask", to_json(r.ablur.mask)}}},
      {"ij", {{"gamma", r.ij.gamma}}},
      {"lc", {{"quality", r.lc.quality}, {"mask", to_json(r.lc.mask)}}},
  };
}

inline DegradationRecipe recipe_from_json(const nlohmann::json& j) {
  try {
    if (j.at("schema").get<int>() != kRecipeSchemaVersion)
      throw ConfigError("unsupported recipe schema version " + j.at("schema").dump());
    DegradationRecipe r;
    r.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("order")) r.order = order_from_json(j.at("order"));
    const auto& sgn = j.at("sgn");
    r.sgn = {sgn.at("noise_sigma").get<double>(), sgn.at("splat_kernel_size").get<int>(),
             sgn.at("splat_sigma").get<double>(), mask_from_json(sgn.at("mask"))};
    const auto& repos = j.at("repos");
    r.repos = {repos.at("prob").get<double>(), repos.at("max_offset").get<int>(), mask_from_json(repos.at("mask"))};
    const auto& ablur = j.at("ablur");
    r.ablur = {ablur.at("size").get<int>(), ablur.at("angle_deg").get<double>(), ablur.at("sigma_major").get<double>(),
               ablur.at("sigma_minor").get<double>(), mask_from_json(ablur.at("mask"))};
    r.ij.gamma = j.at("ij").at("gamma").get<double>();
    r.lc = {j.at("lc").at("quality").get<int>(), mask_from_json(j.at("lc").at("mask"))};
    validate_recipe(r);
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed recipe JSON: ") + e.what());
  }
}

inline nlohmann::json to_json(const Range& r) {
  nlohmann::json j = nlohmann::json::array({r.lo, r.hi});
  return r.open ? nlohmann::json{{"range", j}, {"open", true}} : j;
}

inline Range range_from_json(const nlohmann::json& j, Range fallback) {
  if (j.is_array()) return {j.at(0).get<double>(), j.at(1).get<double>(), fallback.open};
  return {j.at("range").at(0).get<double>(), j.at("range").at(1).get<double>(), j.value("open", false)};
}

inline nlohmann::json to_json(const RecipeRanges& r) {
  return {
      {"noise_sigma", to_json(r.noise_sigma)},
      {"splat_kernel_size", r.splat_kernel_size},
      {"splat_sigma", to_json(r.splat_sigma)},
      {"repos_prob", r.repos_prob},
      {"repos_max_offset", r.repos_max_offset},
      {"blur_sizes", r.blur_sizes},
      {"blur_angle", to_json(r.blur_angle)},
      {"blur_sigma", to_json(r.blur_sigma)},
      {"gamma", to_json(r.gamma)},
      {"quality", {r.quality.lo, r.quality.hi}},
      {"mask_center_i", to_json(r.mask_center_i)},
      {"mask_center_j", to_json(r.mask_center_j)},
      {"mask_sigma_i", to_json(r.mask_sigma_i)},
      {"mask_sigma_j", to_json(r.mask_sigma_j)},
      {"mask_angle", to_json(r.mask_angle)},
      {"order", order_to_json(r.order)},
  };
}

/// Missing keys keep their defaults.
inline RecipeRanges ranges_from_json(const nlohmann::json& j) {
  RecipeRanges r;
  try {
    auto range = [&](const char* key, Range& dst) {
      if (j.contains(key)) dst = range_from_json(j.at(key), dst);
    };
    range("noise_sigma", r.noise_sigma);
    range("splat_sigma", r.splat_sigma);
    range("blur_angle", r.blur_angle);
    range("blur_sigma", r.blur_sigma);
    range("gamma", r.gamma);
    range("mask_center_i", r.mask_center_i);
    range("mask_center_j", r.mask_center_j);
    range("mask_sigma_i", r.mask_sigma_i);
    range("mask_sigma_j", r.mask_sigma_j);
    range("mask_angle", r.mask_angle);
    r.splat_kernel_size = j.value("splat_kernel_size", r.splat_kernel_size);
    r.repos_prob = j.value("repos_prob", r.repos_prob);
    r.repos_max_offset = j.value("repos_max_offset", r.repos_max_offset);
    if (j.contains("blur_sizes")) r.blur_sizes = j.at("blur_sizes").get<std::vector<int>>();
    if (j.contains("quality")) r.quality = {j.at("quality").at(0).get<int>(), j.at("quality").at(1).get<int>()};
    if (j.contains("order")) r.order = order_from_json(j.at("order"));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed recipe ranges: ") + e.what());
  }
  validate_ranges(r);
  return r;
}

}  // namespace nds
