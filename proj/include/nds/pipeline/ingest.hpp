#pragma once

// Turning raw sequences into (target, ref1, ref2) triples.
//
// Two source kinds are supported. A triplet source is a tree of clip
// directories, each holding the frames of one short sequence. A posed
// source is one scene with a pose file; references are chosen per target
// by view selection.

#include <algorithm>
#include <array>
#include <filesystem>
#include <functional>
#include <iostream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "nds/core/error.hpp"
#include "nds/core/io.hpp"
#include "nds/core/rng.hpp"
#include "nds/viewsel/pose.hpp"
#include "nds/viewsel/select.hpp"

namespace nds {

using WarningSink = std::function<void(std::string_view)>;

inline void warn_to_stderr(std::string_view msg) { std::cerr << "warning: " << msg << '\n'; }

/// One ingested triple. Paths are absolute; `clip` is the clip path
/// relative to the source root (or the scene name).
struct TripletSource {
  std::string dataset;
  std::string clip;
  std::array<std::filesystem::path, 3> frames;  // gt, ref1, ref2
  std::array<int, 3> frame_indices{};           // positions in the sorted frame list
};

/// Image files directly inside `dir`, sorted by file name.
inline std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> out;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && is_image_path(e.path())) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

/// Draws an ordered triple of distinct positions from [0, n), uniform over
/// all n(n-1)(n-2) choices.
inline std::array<int, 3> draw_roles(int n, RandomStream& rng) {
  if (n < 3) throw InvalidParameter("draw_roles: need at least three frames");
  std::vector<int> pool(n);
  for (int i = 0; i < n; ++i) pool[i] = i;
  std::array<int, 3> roles{};
  for (int k = 0; k < 3; ++k) {
    const auto pick = static_cast<std::size_t>(rng.uniform_int(k, n - 1));
    std::swap(pool[k], pool[pick]);
    roles[k] = pool[k];
  }
  return roles;
}

/// Every directory below `root` (and root itself) that directly holds image
/// files is a clip. Clips with fewer than three frames are skipped with a
/// warning. Role draws are keyed by (seed, clip path), so adding or removing
/// a clip does not change the others.
inline std::vector<TripletSource> ingest_triplets(const std::filesystem::path& root, std::uint64_t seed,
                                                  const std::string& dataset = "triplets",
                                                  const WarningSink& warn = warn_to_stderr) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) throw IngestionError("triplet source is not a directory: " + root.string());
  std::vector<fs::path> dirs{root};
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_directory()) dirs.push_back(e.path());
  std::vector<std::pair<std::string, fs::path>> clips;
  for (const auto& d : dirs) {
    std::string rel = fs::relative(d, root).generic_string();
    clips.emplace_back(rel == "." ? std::string() : rel, d);
  }
  std::sort(clips.begin(), clips.end());

  std::vector<TripletSource> out;
  for (const auto& [rel, dir] : clips) {
    const auto frames = list_images(dir);
    if (frames.empty()) continue;
    const std::string name = rel.empty() ? "." : rel;
    if (frames.size() < 3) {
      warn("clip '" + name + "' in " + root.string() + " has " + std::to_string(frames.size()) +
           " frame(s), need 3; skipped");
      continue;
    }
    RandomStream rng(derive_seed(seed, fnv1a64(name)), StreamId::kTripletRoles);
    const auto roles = draw_roles(static_cast<int>(frames.size()), rng);
    out.push_back({dataset, name, {frames[roles[0]], frames[roles[1]], frames[roles[2]]}, roles});
  }
  if (out.empty()) warn("no usable clips under " + root.string());
  return out;
}

struct PosedSceneOptions {
  bool holdout = true;  // every 8th view (index % 8 == 0) is held out for evaluation
  SelectConfig select;
};

/// True for views reserved for evaluation.
inline bool is_holdout_view(int index) { return index % 8 == 0; }

/// Frames come from `<dir>/images` when present, else `dir`; poses from
/// `poses.json` or `poses_bounds.npy` in `dir`. Every non-held-out view
/// becomes a target with its two least-cost references. Held-out views are
/// neither targets nor references.
inline std::vector<TripletSource> ingest_posed_scene(const std::filesystem::path& dir, const PosedSceneOptions& opt = {},
                                                     const std::string& dataset = "posed") {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw IngestionError("posed source is not a directory: " + dir.string());
  const auto frames = list_images(fs::is_directory(dir / "images") ? dir / "images" : dir);
  std::vector<CameraPose> cams;
  try {
    if (fs::exists(dir / "poses.json")) cams = read_poses_json(dir / "poses.json");
    else if (fs::exists(dir / "poses_bounds.npy")) cams = read_llff_poses(dir / "poses_bounds.npy");
    else throw IngestionError("no poses.json or poses_bounds.npy in " + dir.string());
  } catch (const InvalidInput& e) {
    throw IngestionError(dir.string() + ": " + e.what());
  }
  if (cams.size() != frames.size())
    throw IngestionError(dir.string() + ": " + std::to_string(frames.size()) + " frames but " +
                         std::to_string(cams.size()) + " poses");

  const int n = static_cast<int>(cams.size());
  std::set<int> held;
  if (opt.holdout)
    for (int i = 0; i < n; ++i)
      if (is_holdout_view(i)) held.insert(i);

  std::vector<TripletSource> out;
  const std::string scene = dir.filename().string();
  SelectConfig select = opt.select;
  for (int t = 0; t < n; ++t) {
    if (held.count(t)) continue;
    std::vector<int> refs;
    try {
      // One sphere for the whole scene.
      if (!select.sphere) select.sphere = estimate_sphere(cams, select.rho);
      refs = select_references(cams, t, 2, held, select);
    } catch (const InvalidInput& e) {
      throw IngestionError(dir.string() + ": " + e.what());
    } catch (const DegenerateGeometry& e) {
      throw IngestionError(dir.string() + ": " + e.what());
    }
    out.push_back({dataset, scene, {frames[t], frames[refs[0]], frames[refs[1]]}, {t, refs[0], refs[1]}});
  }
  return out;
}

}  // namespace nds
