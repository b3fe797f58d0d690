// nds: command-line front end for the degradation, view-selection, WKS and
// dataset modules. Exit codes: 0 ok, 1 input/config error, 2 verify failure.
#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "nds/core/io.hpp"
#include "nds/degrade/simulator.hpp"
#include "nds/pipeline/dataset.hpp"
#include "nds/pipeline/quality.hpp"
#include "nds/viewsel/select.hpp"
#include "nds/wks/wks.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitVerify = 2;

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw nds::IoError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw nds::ConfigError(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw nds::IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::vector<nds::CameraPose> load_poses(const fs::path& path) {
  return path.extension() == ".npy" ? nds::read_llff_poses(path) : nds::read_poses_json(path);
}

nds::BoundingSphere parse_sphere(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  for (std::string tok; std::getline(ss, tok, ',');) {
    try {
      v.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw nds::InvalidParameter("--sphere: bad number '" + tok + "'");
    }
  }
  if (v.size() != 4 || !(v[3] > 0.0)) throw nds::InvalidParameter("--sphere expects cx,cy,cz,r with r > 0");
  return {{v[0], v[1], v[2]}, v[3]};
}

// ---- degrade -------------------------------------------------------------

struct DegradeArgs {
  fs::path input, out, recipe_out, recipe_in, ranges;
  std::vector<fs::path> refs, refs_out;
  std::uint64_t seed = 0;
};

int run_degrade(const DegradeArgs& a) {
  const auto target = nds::quantize8(nds::read_rgb(a.input));
  std::vector<nds::ImageBuffer> refs;
  for (const auto& p : a.refs) refs.push_back(nds::quantize8(nds::read_rgb(p)));

  nds::DegradationRecipe recipe;
  if (!a.recipe_in.empty()) {
    recipe = nds::recipe_from_json(read_json(a.recipe_in));
  } else {
    const nds::RecipeRanges ranges = a.ranges.empty() ? nds::RecipeRanges{} : nds::ranges_from_json(read_json(a.ranges));
    recipe = nds::sample_recipe(a.seed, nds::scale_mask_ranges(ranges, target.height(), target.width()));
  }

  const auto res = nds::degrade(target, refs, recipe);
  fs::create_directories(a.out);
  nds::write_png(a.out / "degraded.png", res.degraded);
  if (!a.refs_out.empty()) {
    nds::write_png(a.refs_out[0], res.refs[0]);
    nds::write_png(a.refs_out[1], res.refs[1]);
  } else {
    nds::write_png(a.out / "ref1.png", res.refs[0]);
    nds::write_png(a.out / "ref2.png", res.refs[1]);
  }
  write_json(a.recipe_out.empty() ? a.out / "recipe.json" : a.recipe_out, nds::to_json(recipe));
  return kExitOk;
}

// ---- select-views --------------------------------------------------------

struct SelectArgs {
  fs::path poses;
  int target = 0, k = 2, grid = 16;
  std::string sphere;
  double rho = 0.7;
};

int run_select(const SelectArgs& a) {
  const auto cams = load_poses(a.poses);
  nds::SelectConfig cfg;
  cfg.grid_n = a.grid;
  cfg.rho = a.rho;
  cfg.sphere = a.sphere.empty() ? nds::estimate_sphere(cams, a.rho) : parse_sphere(a.sphere);
  const auto refs = nds::select_references(cams, a.target, a.k, {}, cfg);

  // Costs from the target to every view, for inspection.
  const auto target_hits = nds::cast_rays(cams[a.target], *cfg.sphere, cfg.grid_n, a.target);
  nlohmann::json costs = nlohmann::json::array();
  for (std::size_t i = 0; i < cams.size(); ++i) {
    if (static_cast<int>(i) == a.target) {
      costs.push_back(nullptr);
      continue;
    }
    const double c = nds::mutual_cost(target_hits, nds::cast_rays(cams[i], *cfg.sphere, cfg.grid_n, int(i)));
    costs.push_back(std::isfinite(c) ? nlohmann::json(c) : nlohmann::json(nullptr));
  }
  const nlohmann::json out = {
      {"target", a.target},
      {"refs", refs},
      {"grid", cfg.grid_n},
      {"sphere", {cfg.sphere->center.x(), cfg.sphere->center.y(), cfg.sphere->center.z(), cfg.sphere->radius}},
      {"costs", costs},
  };
  std::cout << out.dump(2) << '\n';
  return kExitOk;
}

// ---- wks-eval ------------------------------------------------------------

struct WksArgs {
  fs::path pred, gt, real;
  int patch = 7, stride = 4;
  std::size_t k = 5;
  double alpha = 1.0, beta = 1.0;
  std::string reduction = "mean";
  unsigned threads = 0;
};

int run_wks(const WksArgs& a) {
  nds::WksOptions opt;
  opt.alpha = a.alpha;
  opt.beta = a.beta;
  opt.reduction = nds::reduction_from_name(a.reduction);
  opt.threads = nds::resolve_threads(a.threads);
  const auto res = nds::wks_evaluate(nds::read_rgb(a.pred), nds::read_rgb(a.gt), nds::read_rgb(a.real), a.patch,
                                     a.stride, a.k, opt);
  const auto& t = res.patch_terms;
  double sum = 0.0, sq = 0.0;
  for (const double v : t) sum += v;
  const double mean = sum / static_cast<double>(t.size());
  for (const double v : t) sq += (v - mean) * (v - mean);
  const auto [lo, hi] = std::minmax_element(t.begin(), t.end());
  const nlohmann::json out = {
      {"loss", res.loss},
      {"reduction", a.reduction},
      {"per_patch_stats",
       {{"count", t.size()},
        {"mean", mean},
        {"std", std::sqrt(sq / static_cast<double>(t.size()))},
        {"min", *lo},
        {"max", *hi}}},
  };
  std::cout << out.dump(2) << '\n';
  return kExitOk;
}

// ---- dataset ---------------------------------------------------------------

int run_build(const fs::path& config, unsigned threads, bool overwrite) {
  auto cfg = nds::read_dataset_config(config);
  if (threads) cfg.threads = threads;
  cfg.overwrite = cfg.overwrite || overwrite;
  const auto r = nds::build_dataset(cfg);
  std::cout << nlohmann::json{{"count", r.count}, {"verified", r.verified}, {"valid", r.valid()}}.dump() << '\n';
  for (const auto& f : r.failures) std::cerr << "verify failed: " << f.id << ": " << f.reason << '\n';
  return r.valid() ? kExitOk : kExitVerify;
}

int run_verify(const fs::path& dir, double fraction, std::uint64_t seed) {
  const auto rep = nds::verify_dataset(dir, fraction, seed);
  std::cout << nlohmann::json{{"checked", rep.checked}, {"failures", rep.failures.size()}, {"ok", rep.ok()}}.dump()
            << '\n';
  for (const auto& f : rep.failures)
    std::cerr << "verify failed: " << (f.id.empty() ? "<tree>" : f.id) << ": " << f.reason << '\n';
  return rep.ok() ? kExitOk : kExitVerify;
}

int run_quality(const fs::path& sim, const fs::path& real, const nds::QualityConfig& cfg, const fs::path& out) {
  const auto rep = nds::quality_report(sim, real, cfg);
  if (!out.empty()) write_json(out, rep);
  std::cout << rep.dump(2) << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"NeRF-style degradation simulator and paired-dataset builder"};
  app.require_subcommand(1);
  int code = kExitOk;

  DegradeArgs dg;
  auto* degrade = app.add_subcommand("degrade", "Degrade one target and its two references");
  degrade->add_option("--input", dg.input, "Target image")->required()->check(CLI::ExistingFile);
  degrade->add_option("--refs", dg.refs, "Two reference images")->required()->expected(2)->check(CLI::ExistingFile);
  degrade->add_option("--seed", dg.seed, "Recipe seed");
  degrade->add_option("--out", dg.out, "Output directory")->required();
  degrade->add_option("--recipe-out", dg.recipe_out, "Where to write the recipe (default <out>/recipe.json)");
  degrade->add_option("--refs-out", dg.refs_out, "Paths for the jetted references")->expected(2);
  auto* recipe_in = degrade->add_option("--recipe", dg.recipe_in, "Replay a stored recipe")->check(CLI::ExistingFile);
  degrade->add_option("--ranges", dg.ranges, "Recipe range overrides (JSON)")
      ->check(CLI::ExistingFile)
      ->excludes(recipe_in);
  degrade->callback([&] { code = run_degrade(dg); });

  SelectArgs sv;
  auto* select = app.add_subcommand("select-views", "Pick reference views for a posed target");
  select->add_option("--poses", sv.poses, "poses.json or poses_bounds.npy")->required()->check(CLI::ExistingFile);
  select->add_option("--target", sv.target, "Target view index")->required();
  select->add_option("--k", sv.k, "Number of references")->capture_default_str();
  select->add_option("--grid", sv.grid, "Rays per image side")->capture_default_str();
  select->add_option("--sphere", sv.sphere, "Bounding sphere cx,cy,cz,r (default: estimated)");
  select->add_option("--rho", sv.rho, "Radius factor for the estimated sphere")->capture_default_str();
  select->callback([&] { code = run_select(sv); });

  WksArgs wk;
  auto* wks = app.add_subcommand("wks-eval", "Weighted top-K similarity loss");
  wks->add_option("--pred", wk.pred)->required()->check(CLI::ExistingFile);
  wks->add_option("--gt", wk.gt)->required()->check(CLI::ExistingFile);
  wks->add_option("--real", wk.real, "Frame providing candidate patches")->required()->check(CLI::ExistingFile);
  wks->add_option("--patch", wk.patch)->capture_default_str();
  wks->add_option("--stride", wk.stride)->capture_default_str();
  wks->add_option("--k", wk.k)->capture_default_str();
  wks->add_option("--alpha", wk.alpha)->capture_default_str();
  wks->add_option("--beta", wk.beta)->capture_default_str();
  wks->add_option("--reduction", wk.reduction)->check(CLI::IsMember({"mean", "sum"}))->capture_default_str();
  wks->add_option("--threads", wk.threads, "0: all cores");
  wks->callback([&] { code = run_wks(wk); });

  fs::path config;
  unsigned build_threads = 0;
  bool overwrite = false;
  auto* build = app.add_subcommand("build-dataset", "Build a paired dataset from a JSON config");
  build->add_option("--config", config)->required()->check(CLI::ExistingFile);
  build->add_option("--threads", build_threads, "Override the config's worker count");
  build->add_flag("--overwrite", overwrite, "Replace an existing dataset in the output directory");
  build->callback([&] { code = run_build(config, build_threads, overwrite); });

  fs::path verify_dir;
  double fraction = 1.0;
  std::uint64_t verify_seed = 0;
  auto* verify = app.add_subcommand("verify-dataset", "Check completeness and re-run degradations");
  verify->add_option("--dir", verify_dir)->required()->check(CLI::ExistingDirectory);
  verify->add_option("--fraction", fraction, "Share of samples to re-degrade")->check(CLI::Range(0.0, 1.0));
  verify->add_option("--seed", verify_seed, "Seed for choosing samples");
  verify->callback([&] { code = run_verify(verify_dir, fraction, verify_seed); });

  fs::path sim, real, report_out;
  nds::QualityConfig qc;
  auto* quality = app.add_subcommand("quality-report", "Compare simulated and real degradation statistics");
  quality->add_option("--sim", sim)->required()->check(CLI::ExistingDirectory);
  quality->add_option("--real", real)->required()->check(CLI::ExistingDirectory);
  quality->add_option("--name-contains", qc.name_contains, "Only use files whose name contains this");
  quality->add_option("--bins", qc.bins)->capture_default_str();
  quality->add_option("--out", report_out, "Also write the report here");
  quality->callback([&] { code = run_quality(sim, real, qc, report_out); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return code;
}
