#pragma once

// Dataset factory: ingest -> offset refs -> sample recipe -> degrade -> write.
//
// Output tree:
//   <out>/manifest.jsonl                 header record, then one line per sample
//   <out>/samples/<id>/{degraded,gt,ref1,ref2}.png
//   <out>/samples/<id>/recipe.json
//
// Every sample draws from its own seed, derive_seed(cfg.seed, hash(id)), so
// the tree is byte-identical for any worker count.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "nds/core/error.hpp"
#include "nds/core/io.hpp"
#include "nds/core/rng.hpp"
#include "nds/degrade/recipe.hpp"
#include "nds/degrade/simulator.hpp"
#include "nds/pipeline/augment.hpp"
#include "nds/pipeline/ingest.hpp"

namespace nds {

inline constexpr int kDatasetSchemaVersion = 1;

// ---- configuration ------------------------------------------------------

struct SourceSpec {
  enum class Kind { kTriplets, kPosed };
  Kind kind = Kind::kTriplets;
  std::filesystem::path dir;
  std::string name;        // dataset label in the manifest; defaults to the kind
  double weight = 1.0;     // fraction of this source's triples kept, (0, 1]
  PosedSceneOptions posed;
};

struct DatasetConfig {
  std::vector<SourceSpec> sources;
  RecipeRanges recipe_ranges;
  int global_offset_max = -1;  // < 0: default_offset_max(h, w)
  std::uint64_t seed = 0;
  std::filesystem::path output_dir;
  double verify_fraction = 0.05;
  unsigned threads = 0;  // 0: hardware concurrency; NDS_THREADS caps either way
  bool overwrite = false;
};

inline void validate_config(const DatasetConfig& c) {
  if (c.sources.empty()) throw ConfigError("dataset config: no sources");
  for (const auto& s : c.sources)
    if (!(s.weight > 0.0 && s.weight <= 1.0)) throw ConfigError("dataset config: source weight must lie in (0, 1]");
  if (!(c.verify_fraction >= 0.0 && c.verify_fraction <= 1.0))
    throw ConfigError("dataset config: verify_fraction must lie in [0, 1]");
  if (c.output_dir.empty()) throw ConfigError("dataset config: output_dir is required");
  validate_ranges(c.recipe_ranges);
}

/// Everything that determines the output bytes. Output location, thread
/// count and the overwrite flag are left out.
inline nlohmann::json content_json(const DatasetConfig& c) {
  nlohmann::json sources = nlohmann::json::array();
  for (const auto& s : c.sources) {
    nlohmann::json j{{"type", s.kind == SourceSpec::Kind::kTriplets ? "triplets" : "posed"},
                     {"dir", s.dir.generic_string()},
                     {"name", s.name},
                     {"weight", s.weight}};
    if (s.kind == SourceSpec::Kind::kPosed) {
      j["holdout"] = s.posed.holdout;
      j["grid"] = s.posed.select.grid_n;
      j["rho"] = s.posed.select.rho;
      if (s.posed.select.sphere) {
        const auto& sp = *s.posed.select.sphere;
        j["sphere"] = {sp.center.x(), sp.center.y(), sp.center.z(), sp.radius};
      }
    }
    sources.push_back(j);
  }
  return {{"schema", kDatasetSchemaVersion},         {"seed", c.seed},
          {"sources", sources},                      {"recipe_ranges", to_json(c.recipe_ranges)},
          {"global_offset_max", c.global_offset_max}, {"verify_fraction", c.verify_fraction}};
}

inline nlohmann::json to_json(const DatasetConfig& c) {
  auto j = content_json(c);
  j["output_dir"] = c.output_dir.generic_string();
  j["threads"] = c.threads;
  j["overwrite"] = c.overwrite;
  return j;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string config_hash(const DatasetConfig& c) { return hex64(fnv1a64(content_json(c).dump())); }

/// Relative paths resolve against `base` (the config file's directory).
inline DatasetConfig dataset_config_from_json(const nlohmann::json& j, const std::filesystem::path& base = {}) {
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_relative() && !base.empty() ? base / path : path;
  };
  DatasetConfig c;
  try {
    if (j.at("schema").get<int>() != kDatasetSchemaVersion)
      throw ConfigError("unsupported dataset config schema " + j.at("schema").dump());
    c.seed = j.value("seed", std::uint64_t{0});
    c.output_dir = resolve(j.at("output_dir").get<std::string>());
    c.verify_fraction = j.value("verify_fraction", 0.05);
    c.global_offset_max = j.value("global_offset_max", -1);
    c.threads = j.value("threads", 0u);
    c.overwrite = j.value("overwrite", false);
    if (j.contains("recipe_ranges")) c.recipe_ranges = ranges_from_json(j.at("recipe_ranges"));
    for (const auto& s : j.at("sources")) {
      SourceSpec spec;
      const auto type = s.at("type").get<std::string>();
      if (type == "triplets") spec.kind = SourceSpec::Kind::kTriplets;
      else if (type == "posed") spec.kind = SourceSpec::Kind::kPosed;
      else throw ConfigError("unknown source type '" + type + "'");
      spec.dir = resolve(s.at("dir").get<std::string>());
      spec.name = s.value("name", type);
      spec.weight = s.value("weight", 1.0);
      spec.posed.holdout = s.value("holdout", true);
      spec.posed.select.grid_n = s.value("grid", 16);
      spec.posed.select.rho = s.value("rho", 0.7);
      if (s.contains("sphere")) {
        const auto v = s.at("sphere").get<std::vector<double>>();
        if (v.size() != 4) throw ConfigError("sphere must be [cx, cy, cz, r]");
        spec.posed.select.sphere = BoundingSphere{{v[0], v[1], v[2]}, v[3]};
      }
      c.sources.push_back(spec);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed dataset config: ") + e.what());
  }
  validate_config(c);
  return c;
}

inline DatasetConfig read_dataset_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return dataset_config_from_json(j, path.parent_path());
}

/// Requested worker count (0 = hardware), capped by NDS_THREADS when set.
inline unsigned resolve_threads(unsigned requested) {
  unsigned n = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("NDS_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap > 0) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
  }
  return std::max(1u, n);
}

/// Runs fn(i) for i in [0, n) on `threads` workers pulling from a shared
/// counter. The first exception stops the pool and is rethrown.
template <typename F>
void parallel_for(std::size_t n, unsigned threads, F&& fn) {
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n || failed.load()) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

// ---- samples and manifest -----------------------------------------------

struct PairedSample {
  std::string id;
  std::string degraded_path, gt_path, ref1_path, ref2_path, recipe_path;  // relative to the output dir
  DegradationRecipe recipe;
  TripletSource source;
  std::array<int, 4> offsets{};
};

inline std::string sample_id(std::size_t index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%06zu", index);
  return buf;
}

inline std::uint64_t sample_seed(std::uint64_t dataset_seed, const std::string& id) {
  return derive_seed(dataset_seed, fnv1a64(id));
}

inline nlohmann::json manifest_entry(const PairedSample& s) {
  return {{"id", s.id},
          {"degraded", s.degraded_path},
          {"gt", s.gt_path},
          {"ref1", s.ref1_path},
          {"ref2", s.ref2_path},
          {"recipe", s.recipe_path},
          {"seed", s.recipe.seed},
          {"offsets", s.offsets},
          {"source", {{"dataset", s.source.dataset}, {"clip", s.source.clip}, {"frame_indices", s.source.frame_indices}}}};
}

/// All triples from every source, in config order, weight-subsampled.
inline std::vector<TripletSource> ingest_sources(const DatasetConfig& cfg, const WarningSink& warn = warn_to_stderr) {
  std::vector<TripletSource> all;
  for (const auto& spec : cfg.sources) {
    const std::string name = spec.name.empty() ? (spec.kind == SourceSpec::Kind::kTriplets ? "triplets" : "posed") : spec.name;
    auto triples = spec.kind == SourceSpec::Kind::kTriplets ? ingest_triplets(spec.dir, cfg.seed, name, warn)
                                                            : ingest_posed_scene(spec.dir, spec.posed, name);
    for (auto& t : triples) {
      if (spec.weight < 1.0) {
        const std::string key = t.dataset + "/" + t.clip + "/" + std::to_string(t.frame_indices[0]);
        RandomStream rng(derive_seed(cfg.seed, fnv1a64(key)), StreamId::kTargetChoice);
        if (!(rng.uniform() < spec.weight)) continue;
      }
      all.push_back(std::move(t));
    }
  }
  return all;
}

/// Re-runs degrade from the stored gt and recipe and compares 8-bit output.
/// Returns an empty string on success, else the reason.
inline std::string verify_sample(const std::filesystem::path& out_dir, const nlohmann::json& entry) {
  try {
    std::ifstream in(out_dir / entry.at("recipe").get<std::string>());
    if (!in) return "missing recipe file";
    const auto recipe = recipe_from_json(nlohmann::json::parse(in));
    const auto gt = read_rgb(out_dir / entry.at("gt").get<std::string>());
    const auto stored = read_rgb(out_dir / entry.at("degraded").get<std::string>());
    if (!stored.same_shape(gt)) return "degraded and gt sizes differ";
    // The degraded target does not depend on the reference pixels.
    const auto again = degrade(gt, {gt, gt}, recipe);
    if (to_bytes(again.degraded) != to_bytes(stored)) return "degraded image does not reproduce from gt + recipe";
    return {};
  } catch (const std::exception& e) {
    return e.what();
  }
}

/// Deterministic choice of ceil(fraction · n) sample indices, ascending.
inline std::vector<std::size_t> choose_verify_indices(std::size_t n, double fraction, std::uint64_t seed) {
  const auto m = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n)));
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  RandomStream rng(seed, StreamId::kVerifySelection);
  for (std::size_t k = 0; k < std::min(m, n); ++k)
    std::swap(idx[k], idx[static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(k), static_cast<std::int64_t>(n - 1)))]);
  idx.resize(std::min(m, n));
  std::sort(idx.begin(), idx.end());
  return idx;
}

struct VerifyFailure {
  std::string id;
  std::string reason;
};

struct BuildResult {
  std::size_t count = 0;
  std::size_t verified = 0;
  std::vector<VerifyFailure> failures;
  bool valid() const { return failures.empty(); }
};

inline void write_manifest(const std::filesystem::path& out_dir, const std::string& hash,
                           const std::vector<nlohmann::json>& entries, std::size_t verified, bool valid) {
  std::ofstream out(out_dir / "manifest.jsonl", std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write manifest in " + out_dir.string());
  const nlohmann::json header{{"schema", kDatasetSchemaVersion}, {"config_hash", hash},
                              {"count", entries.size()},         {"verified", verified},
                              {"valid", valid}};
  out << header.dump() << '\n';
  for (const auto& e : entries) out << e.dump() << '\n';
  if (!out) throw IoError("failed writing manifest in " + out_dir.string());
}

inline BuildResult build_dataset(const DatasetConfig& cfg, const WarningSink& warn = warn_to_stderr) {
  namespace fs = std::filesystem;
  validate_config(cfg);
  const fs::path out_dir = cfg.output_dir;
  if (fs::exists(out_dir) && !fs::is_empty(out_dir)) {
    if (!cfg.overwrite) throw InvalidInput("output directory is not empty: " + out_dir.string());
    fs::remove_all(out_dir / "samples");
    fs::remove(out_dir / "manifest.jsonl");
    if (!fs::is_empty(out_dir)) throw InvalidInput("output directory holds unrelated files: " + out_dir.string());
  }
  fs::create_directories(out_dir / "samples");

  const auto triples = ingest_sources(cfg, warn);
  std::vector<nlohmann::json> entries(triples.size());

  parallel_for(triples.size(), resolve_threads(cfg.threads), [&](std::size_t i) {
    const auto& src = triples[i];
    PairedSample s;
    s.id = sample_id(i);
    s.source = src;
    const std::uint64_t seed = sample_seed(cfg.seed, s.id);
    // The stored gt is 8-bit, so degrade the quantized target; verify then
    // starts from exactly the same values.
    const ImageBuffer gt = quantize8(read_rgb(src.frames[0]));
    const ImageBuffer r1 = read_rgb(src.frames[1]);
    const ImageBuffer r2 = read_rgb(src.frames[2]);
    if (!r1.same_shape(gt) || !r2.same_shape(gt))
      throw IngestionError("reference frames of " + src.dataset + "/" + src.clip + " differ in size from the target");

    const int max_px = cfg.global_offset_max < 0 ? default_offset_max(gt.height(), gt.width()) : cfg.global_offset_max;
    RandomStream offset_rng(seed, StreamId::kGlobalOffsets);
    auto refs = augment_global_offsets(r1, r2, max_px, offset_rng);
    s.offsets = refs.offsets;
    s.recipe = sample_recipe(seed, scale_mask_ranges(cfg.recipe_ranges, gt.height(), gt.width()));
    const auto out = degrade(gt, {refs.ref1, refs.ref2}, s.recipe);

    const std::string rel = "samples/" + s.id + "/";
    fs::create_directories(out_dir / rel);
    s.degraded_path = rel + "degraded.png";
    s.gt_path = rel + "gt.png";
    s.ref1_path = rel + "ref1.png";
    s.ref2_path = rel + "ref2.png";
    s.recipe_path = rel + "recipe.json";
    write_png(out_dir / s.degraded_path, out.degraded);
    write_png(out_dir / s.gt_path, gt);
    write_png(out_dir / s.ref1_path, out.refs[0]);
    write_png(out_dir / s.ref2_path, out.refs[1]);
    std::ofstream(out_dir / s.recipe_path, std::ios::binary) << to_json(s.recipe).dump(2) << '\n';
    entries[i] = manifest_entry(s);
  });

  BuildResult result;
  result.count = entries.size();
  const auto chosen = choose_verify_indices(entries.size(), cfg.verify_fraction, cfg.seed);
  result.verified = chosen.size();
  std::vector<std::string> reasons(chosen.size());
  parallel_for(chosen.size(), resolve_threads(cfg.threads),
               [&](std::size_t k) { reasons[k] = verify_sample(out_dir, entries[chosen[k]]); });
  for (std::size_t k = 0; k < chosen.size(); ++k)
    if (!reasons[k].empty()) result.failures.push_back({entries[chosen[k]].at("id").get<std::string>(), reasons[k]});

  write_manifest(out_dir, config_hash(cfg), entries, result.verified, result.valid());
  return result;
}

struct Manifest {
  nlohmann::json header;
  std::vector<nlohmann::json> entries;
};

inline Manifest read_manifest(const std::filesystem::path& out_dir) {
  std::ifstream in(out_dir / "manifest.jsonl");
  if (!in) throw InvalidInput("no manifest.jsonl in " + out_dir.string());
  Manifest m;
  std::string line;
  try {
    if (!std::getline(in, line)) throw InvalidInput("empty manifest in " + out_dir.string());
    m.header = nlohmann::json::parse(line);
    if (m.header.at("schema").get<int>() != kDatasetSchemaVersion) throw InvalidInput("unsupported manifest schema");
    while (std::getline(in, line))
      if (!line.empty()) m.entries.push_back(nlohmann::json::parse(line));
    if (m.header.at("count").get<std::size_t>() != m.entries.size())
      throw InvalidInput("manifest count does not match its entries");
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

struct VerifyReport {
  std::size_t checked = 0;
  std::vector<VerifyFailure> failures;
  bool ok() const { return failures.empty(); }
};

/// Checks that the manifest and the files under `out_dir` reference each
/// other one-to-one, then re-degrades a fraction of samples (all by
/// default). Failures carry the sample id ("" for stray files).
inline VerifyReport verify_dataset(const std::filesystem::path& out_dir, double fraction = 1.0, std::uint64_t seed = 0) {
  namespace fs = std::filesystem;
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw InvalidParameter("verify fraction must lie in [0, 1]");
  const auto m = read_manifest(out_dir);
  VerifyReport rep;

  std::set<std::string> referenced;
  for (const auto& e : m.entries) {
    const auto id = e.at("id").get<std::string>();
    for (const char* key : {"degraded", "gt", "ref1", "ref2", "recipe"}) {
      const auto rel = e.at(key).get<std::string>();
      if (!referenced.insert(rel).second) rep.failures.push_back({id, "file referenced twice: " + rel});
      if (!fs::is_regular_file(out_dir / rel)) rep.failures.push_back({id, "missing file: " + rel});
    }
  }
  for (const auto& f : fs::recursive_directory_iterator(out_dir)) {
    if (!f.is_regular_file()) continue;
    const auto rel = fs::relative(f.path(), out_dir).generic_string();
    if (rel != "manifest.jsonl" && !referenced.count(rel)) rep.failures.push_back({"", "unreferenced file: " + rel});
  }

  const auto chosen = choose_verify_indices(m.entries.size(), fraction, seed);
  std::vector<std::string> reasons(chosen.size());
  parallel_for(chosen.size(), resolve_threads(0),
               [&](std::size_t k) { reasons[k] = verify_sample(out_dir, m.entries[chosen[k]]); });
  rep.checked = chosen.size();
  for (std::size_t k = 0; k < chosen.size(); ++k)
    if (!reasons[k].empty()) rep.failures.push_back({m.entries[chosen[k]].at("id").get<std::string>(), reasons[k]});
  return rep;
}

}  // namespace nds
