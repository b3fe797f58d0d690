// Acceptance run: one PASS/FAIL line per criterion, with runtime against its
// budget. Exit status is the number of failed criteria.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>
#include <string>

#include "corpus.hpp"
#include "nds/core/color.hpp"
#include "nds/core/filter.hpp"
#include "nds/degrade/simulator.hpp"
#include "nds/pipeline/dataset.hpp"
#include "nds/pipeline/quality.hpp"
#include "nds/viewsel/select.hpp"
#include "nds/wks/wks.hpp"
#include "oracles.hpp"
#include "rigs.hpp"
#include "test_util.hpp"

namespace nds {
namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail = what;
    pass = pass && ok;
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome degradation_ranges() {
  Outcome o;
  const RecipeRanges defaults;
  auto in_mask = [](const MaskParams& m) {
    return m.c_i > -16.0 && m.c_i < 144.0 && m.c_j > -16.0 && m.c_j < 144.0 && m.sigma_i > 13.0 && m.sigma_i < 25.0;
  };
  for (std::uint64_t s = 0; s < 10000; ++s) {
    const auto r = sample_recipe(s, defaults);
    const bool ok = r.sgn.noise_sigma >= 0.01 && r.sgn.noise_sigma <= 0.05 &&
                    (r.ablur.size == 3 || r.ablur.size == 5 || r.ablur.size == 7) &&
                    r.ablur.sigma_major >= 0.2 && r.ablur.sigma_major <= 1.2 && r.ablur.sigma_minor >= 0.2 &&
                    r.ablur.sigma_minor <= 1.2 && r.ablur.angle_deg >= 0.0 && r.ablur.angle_deg < 180.0 &&
                    r.ij.gamma >= 0.95 && r.ij.gamma <= 1.05 && r.lc.quality >= 20 && r.lc.quality <= 90 &&
                    r.repos.prob == 0.1 && in_mask(r.sgn.mask) && in_mask(r.repos.mask) && in_mask(r.ablur.mask) &&
                    in_mask(r.lc.mask);
    o.require(ok, "recipe " + std::to_string(s) + " out of range");
  }
  // Displacement rate of the pixel jitter on a 512x512 frame.
  RandomStream rng(2024, StreamId::kReposition);
  RepositionStats stats;
  reposition(ImageBuffer(512, 512, 3), 0.1, 2, rng, &stats);
  const double rate = static_cast<double>(stats.displaced) / static_cast<double>(stats.total);
  o.require(rate >= 0.09 && rate <= 0.11, "reposition rate " + fmt("%.4f", rate));
  if (o.pass) o.detail = "10000 recipes in range, reposition rate " + fmt("%.4f", rate);
  return o;
}

// ---------------------------------------------------------------------------

Outcome determinism() {
  Outcome o;
  const auto root = test::scratch_dir("acceptance_determinism");
  test::make_clip_corpus(root / "clips", 20, 5, 96, 128, 11);
  auto build = [&](const char* name, unsigned threads) {
    DatasetConfig cfg;
    SourceSpec src;
    src.dir = root / "clips";
    src.name = "clips";
    cfg.sources.push_back(src);
    cfg.seed = 20240601;
    cfg.output_dir = root / name;
    cfg.threads = threads;
    const auto r = build_dataset(cfg, [](std::string_view) {});
    return std::pair{r, test::snapshot_tree(cfg.output_dir)};
  };
  const auto [ra, a] = build("run_a", 4);
  const auto [rb, b] = build("run_b", 4);
  const auto [r1, one] = build("workers_1", 1);
  const auto [r8, eight] = build("workers_8", 8);
  o.require(ra.count == 20 && ra.valid(), "first build produced " + std::to_string(ra.count) + " samples");
  o.require(a == b, "repeated run differs");
  o.require(one == eight, "1 vs 8 workers differ");
  o.require(one == a, "worker count changes the tree");
  if (o.pass) o.detail = std::to_string(a.size()) + " files identical across 4 builds";
  std::filesystem::remove_all(root);
  return o;
}

// ---------------------------------------------------------------------------

Outcome view_selection() {
  Outcome o;
  const int n = 8, grid = 16;
  const auto cams = test::ring_rig(n);
  const auto refs = select_references(cams, 0, 2);
  o.require(std::set<int>(refs.begin(), refs.end()) == std::set<int>{1, 7}, "ring target 0 did not pick {1, 7}");

  const auto sphere = estimate_sphere(cams);
  const auto hits = cast_all(cams, sphere, grid);
  const auto table = cost_matrix(hits, 1);
  double worst_hit = 0.0;
  for (int i = 0; i < n; ++i) {
    // Independent ray caster for the hit points themselves.
    const auto ref = oracle::ring_camera_hits(2 * std::numbers::pi * i / n, 4.0, 60.0, 64, 48, grid, sphere.radius);
    o.require(ref.size() == hits[i].points.size(), "hit count differs from the ray oracle");
    for (std::size_t p = 0; p < std::min(ref.size(), hits[i].points.size()); ++p)
      for (int a = 0; a < 3; ++a) worst_hit = std::max(worst_hit, std::abs(ref[p][a] - hits[i].points[p](a)));
  }
  o.require(worst_hit < 1e-9, "hit points drift " + fmt("%.3g", worst_hit));

  auto pts = [](const RayHitSet& h) {
    std::vector<oracle::Point3> v;
    for (const auto& p : h.points) v.push_back({p.x(), p.y(), p.z()});
    return v;
  };
  int mismatches = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && table[i][j] != oracle::brute_mutual_cost(pts(hits[i]), pts(hits[j]))) ++mismatches;
  o.require(mismatches == 0, std::to_string(mismatches) + " pairwise costs differ from brute force");

  RandomStream rng(77, StreamId::kTest);
  const Eigen::Quaterniond q = Eigen::Quaterniond(rng.normal(), rng.normal(), rng.normal(), rng.normal()).normalized();
  const auto moved = test::transform_rig(cams, q.toRotationMatrix(), {rng.normal(), rng.normal(), rng.normal()});
  for (int t = 0; t < n; ++t) {
    const auto before = select_references(cams, t, 2);
    const auto after = select_references(moved, t, 2);
    o.require(std::set<int>(before.begin(), before.end()) == std::set<int>(after.begin(), after.end()),
              "rigid transform changed the selection for target " + std::to_string(t));
  }
  if (o.pass) o.detail = "refs {1,7}, 56 costs exact, rigid-invariant";
  return o;
}

// ---------------------------------------------------------------------------

Outcome wks_oracle() {
  Outcome o;
  const int patch = 7, stride = 4;
  double worst_loss = 0.0, worst_weight = 0.0;
  std::size_t topk_mismatch = 0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto pred = test::random_image(32, 32, 3, 3 * s + 1);
    const auto gt = test::random_image(32, 32, 3, 3 * s + 2);
    const auto real = test::random_image(32, 32, 3, 3 * s + 3);
    const auto cands = unfold_patches(real, patch, stride);
    std::vector<std::vector<double>> ref_cands;
    for (const auto& org : cands.origins) ref_cands.push_back(oracle::patch_at(real, org.row, org.col, patch));
    const auto qp = unfold_patches(pred, patch, stride);
    const auto qg = unfold_patches(gt, patch, stride);
    for (const std::size_t k : {1u, 3u, 5u}) {
      for (std::size_t i = 0; i < qp.count(); ++i) {
        const auto m = topk_buddies(qp.patch(i), qg.patch(i), cands, k, 1.0, 1.0);
        const auto ref = oracle::exhaustive_topk(oracle::patch_at(pred, qp.origins[i].row, qp.origins[i].col, patch),
                                                 oracle::patch_at(gt, qg.origins[i].row, qg.origins[i].col, patch),
                                                 ref_cands, k, 1.0, 1.0);
        if (m.indices != ref) ++topk_mismatch;
        const auto w = wks_weights(m, qp.patch(i), cands);
        double sum = 0.0;
        for (const double v : w) sum += v;
        worst_weight = std::max(worst_weight, std::abs(sum - 1.0));
      }
      const double got = wks_loss(pred, gt, real, patch, stride, k);
      const double ref = oracle::naive_wks_loss(pred, gt, real, patch, stride, k);
      worst_loss = std::max(worst_loss, std::abs(got - ref));
    }
  }
  o.require(topk_mismatch == 0, std::to_string(topk_mismatch) + " top-K sets differ");
  o.require(worst_loss <= 1e-6, "loss error " + fmt("%.3g", worst_loss));
  o.require(worst_weight <= 1e-6, "weight sum error " + fmt("%.3g", worst_weight));

  // K = 1, beta = 0: plain nearest-neighbour L1 against the real frame.
  const auto pred = test::random_image(32, 32, 3, 900), gt = test::random_image(32, 32, 3, 901),
             real = test::random_image(32, 32, 3, 902);
  WksOptions opt;
  opt.beta = 0.0;
  double nn_total = 0.0;
  int count = 0;
  for (int r = 0; r + patch <= 32; r += stride)
    for (int c = 0; c + patch <= 32; c += stride) {
      const auto p = oracle::patch_at(pred, r, c, patch);
      double best = INFINITY, l1 = 0.0;
      for (int rr = 0; rr + patch <= 32; rr += stride)
        for (int cc = 0; cc + patch <= 32; cc += stride) {
          const auto q = oracle::patch_at(real, rr, cc, patch);
          const double d = oracle::sq_dist(p, q);
          if (d < best) {
            best = d;
            l1 = 0.0;
            for (std::size_t e = 0; e < p.size(); ++e) l1 += std::abs(q[e] - p[e]);
          }
        }
      nn_total += l1;
      ++count;
    }
  const double degenerate = std::abs(wks_loss(pred, gt, real, patch, stride, 1, opt) - nn_total / count);
  o.require(degenerate <= 1e-6, "K=1 beta=0 differs from nearest-neighbour L1 by " + fmt("%.3g", degenerate));
  if (o.pass)
    o.detail = "150 cases, max loss error " + fmt("%.2g", worst_loss) + ", weight error " + fmt("%.2g", worst_weight);
  return o;
}

// ---------------------------------------------------------------------------

double aniso_formula(int x, int y, double s1, double s2, double deg) {
  const double t = deg * std::numbers::pi / 180.0;
  const double c = std::cos(t), s = std::sin(t);
  const double sxx = c * c * s1 * s1 + s * s * s2 * s2;
  const double syy = s * s * s1 * s1 + c * c * s2 * s2;
  const double sxy = c * s * (s1 * s1 - s2 * s2);
  const double det = sxx * syy - sxy * sxy;
  return std::exp(-0.5 * (syy * x * x - 2 * sxy * x * y + sxx * y * y) / det);
}

Outcome image_math() {
  Outcome o;
  RandomStream rng(5, StreamId::kTest);
  double conv_err = 0.0;
  for (int t = 0; t < 60; ++t) {
    const int h = static_cast<int>(rng.uniform_int(1, 16)), w = static_cast<int>(rng.uniform_int(1, 16));
    const int ks = 2 * static_cast<int>(rng.uniform_int(0, 3)) + 1;
    const auto img = test::random_image(h, w, 3, 100 + t);
    const auto k = gaussian_kernel_aniso(ks, rng.uniform(0.2, 2.0), rng.uniform(0.2, 2.0), rng.uniform(0.0, 180.0));
    conv_err = std::max(conv_err, test::max_abs_diff(convolve2d(img, k), oracle::naive_convolve(img, k)));
  }
  o.require(conv_err <= 1e-6, "convolution error " + fmt("%.3g", conv_err));

  double kern_err = 0.0;
  for (int t = 0; t < 50; ++t) {
    const int ks = 2 * static_cast<int>(rng.uniform_int(1, 3)) + 1, r = ks / 2;
    const double s1 = rng.uniform(0.2, 1.2), s2 = rng.uniform(0.2, 1.2), deg = rng.uniform(0.0, 180.0);
    double total = 0.0;
    for (int y = -r; y <= r; ++y)
      for (int x = -r; x <= r; ++x) total += aniso_formula(x, y, s1, s2, deg);
    const auto k = gaussian_kernel_aniso(ks, s1, s2, deg);
    for (int y = -r; y <= r; ++y)
      for (int x = -r; x <= r; ++x)
        kern_err = std::max(kern_err, std::abs(k.at(y + r, x + r) - aniso_formula(x, y, s1, s2, deg) / total));
  }
  o.require(kern_err <= 1e-9, "kernel error " + fmt("%.3g", kern_err));

  const auto img = test::random_image(100, 100, 3, 2024);
  const double lab_err = test::max_abs_diff(img, lab_to_srgb(srgb_to_lab(img)));
  o.require(lab_err < 1e-3, "LAB round trip " + fmt("%.3g", lab_err));

  // JPEG on a [0, 255] plane: quality 100 within 2 levels; error falls with quality.
  const int h = 64, w = 64;
  std::vector<float> noisy(h * w), smooth(h * w);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) {
      noisy[i * w + j] = static_cast<float>(255.0 * rng.uniform());
      smooth[i * w + j] =
          static_cast<float>(128 + 60 * std::sin(0.2 * i) * std::cos(0.15 * j) + ((i / 8 + j / 8) % 2) * 30);
    }
  double q100 = 0.0;
  const auto out = jpeg_luma_compress(noisy, h, w, 100);
  for (std::size_t i = 0; i < out.size(); ++i) q100 = std::max(q100, std::abs(double(out[i]) - noisy[i]));
  o.require(q100 <= 2.0, "quality-100 error " + fmt("%.3g", q100) + "/255");
  auto sq = [&](int q) {
    const auto c = jpeg_luma_compress(smooth, h, w, q);
    double s = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) s += (c[i] - smooth[i]) * double(c[i] - smooth[i]);
    return s;
  };
  const double e20 = sq(20), e50 = sq(50), e90 = sq(90);
  o.require(e20 >= e50 && e50 >= e90, "JPEG error not monotone in quality");
  if (o.pass)
    o.detail = "conv " + fmt("%.2g", conv_err) + ", kernel " + fmt("%.2g", kern_err) + ", lab " + fmt("%.2g", lab_err) +
               ", q100 " + fmt("%.2g", q100) + "/255";
  return o;
}

// ---------------------------------------------------------------------------

Outcome quality_sanity() {
  Outcome o;
  std::vector<ImageBuffer> corpus, blurred;
  const auto k = gaussian_kernel_iso(7, 1.5);
  for (int i = 0; i < 50; ++i) {
    corpus.push_back(test::textured_image(128, 128, 500 + i));
    blurred.push_back(convolve2d(corpus.back(), k));
  }
  const auto base = corpus_stats(corpus);
  const auto self = compare(corpus_stats(corpus), base);
  o.require(self.aggregate == 0.0 && self.gradient_w1 == 0.0, "d(X, X) is not zero");
  const double d = compare(corpus_stats(blurred), base).gradient_w1;
  o.require(d > self.gradient_w1, "blur did not increase the gradient distance");
  if (o.pass) o.detail = "d(X,X)=0, blurred gradient W1 " + fmt("%.4f", d);
  return o;
}

// ---------------------------------------------------------------------------

double median_degrade_ms() {
  const auto target = quantize8(test::textured_image(256, 448, 1));
  const std::vector<ImageBuffer> refs{quantize8(test::textured_image(256, 448, 2)),
                                      quantize8(test::textured_image(256, 448, 3))};
  const auto ranges = scale_mask_ranges({}, 256, 448);
  std::vector<double> ms;
  for (std::uint64_t s = 0; s < 15; ++s) {
    const auto recipe = sample_recipe(s, ranges);
    const auto t0 = Clock::now();
    const auto out = degrade(target, refs, recipe);
    ms.push_back(std::chrono::duration<double, std::milli>(Clock::now() - t0).count());
    if (out.degraded.empty()) return INFINITY;
  }
  std::nth_element(ms.begin(), ms.begin() + ms.size() / 2, ms.end());
  return ms[ms.size() / 2];
}

Outcome throughput() {
  Outcome o;
  const double ms = median_degrade_ms();
  o.require(ms <= 200.0, "median " + fmt("%.1f", ms) + " ms exceeds the 200 ms limit");
  o.detail = "median " + fmt("%.1f", ms) + " ms for 448x256" +
             (ms <= 50.0 ? ", within 50 ms target" : ", above 50 ms soft target (logged)");
  return o;
}

}  // namespace
}  // namespace nds

int main() {
  struct Criterion {
    const char* name;
    double budget_s;
    std::function<nds::Outcome()> run;
  };
  const Criterion criteria[] = {
      {"degradation-ranges", 30, nds::degradation_ranges}, {"determinism", 120, nds::determinism},
      {"view-selection", 10, nds::view_selection},         {"wks-oracle", 60, nds::wks_oracle},
      {"image-math", 30, nds::image_math},                 {"quality-report", 60, nds::quality_sanity},
      {"throughput", 60, nds::throughput},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = nds::Clock::now();
    nds::Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(nds::Clock::now() - t0).count();
    if (s > c.budget_s) o = {false, o.detail + "; over " + std::to_string(int(c.budget_s)) + " s budget"};
    std::printf("%s %-20s %7.2fs / %3.0fs  %s\n", o.pass ? "PASS" : "FAIL", c.name, s, c.budget_s, o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed;
}
