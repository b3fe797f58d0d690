#pragma once

// Weighted top-K similarity loss and multi-scale L1.
//
// Every patch of the prediction is matched against candidate patches
// unfolded from a real exemplar. The K candidates closest to both the
// predicted and the ground-truth patch are kept, weighted by a softmax of
// their negative half squared distance to the prediction, and the weighted
// L1 residuals are summed. Patches are flattened over (row, col, channel).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "nds/core/error.hpp"
#include "nds/core/filter.hpp"
#include "nds/core/image.hpp"

namespace nds {

struct PatchOrigin {
  int row = 0, col = 0;
};

struct PatchGrid {
  int patch_size = 0;
  int stride = 0;
  int channels = 0;
  std::vector<PatchOrigin> origins;
  std::vector<float> values;  // count × dim, row-major

  std::size_t dim() const { return static_cast<std::size_t>(patch_size) * patch_size * channels; }
  std::size_t count() const { return origins.size(); }
  std::span<const float> patch(std::size_t i) const { return {values.data() + i * dim(), dim()}; }

  void push_back(std::span<const float> p, PatchOrigin o) {
    if (p.size() != dim()) throw InvalidInput("PatchGrid: patch has the wrong size");
    values.insert(values.end(), p.begin(), p.end());
    origins.push_back(o);
  }
};

/// All s×s patches at the given stride, row-major scan order.
inline PatchGrid unfold_patches(const ImageBuffer& img, int patch_size, int stride) {
  if (patch_size < 1 || stride < 1) throw InvalidParameter("unfold_patches: patch size and stride must be >= 1");
  if (patch_size > std::min(img.height(), img.width())) throw InvalidInput("unfold_patches: patch larger than image");
  PatchGrid g{patch_size, stride, img.channels(), {}, {}};
  const int rows = (img.height() - patch_size) / stride + 1;
  const int cols = (img.width() - patch_size) / stride + 1;
  g.origins.reserve(static_cast<std::size_t>(rows) * cols);
  g.values.reserve(static_cast<std::size_t>(rows) * cols * g.dim());
  const auto src = img.data();
  const std::size_t row_len = static_cast<std::size_t>(patch_size) * img.channels();
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const int r0 = r * stride, c0 = c * stride;
      g.origins.push_back({r0, c0});
      for (int y = r0; y < r0 + patch_size; ++y) {
        const auto* begin = src.data() + (static_cast<std::size_t>(y) * img.width() + c0) * img.channels();
        g.values.insert(g.values.end(), begin, begin + row_len);
      }
    }
  return g;
}

namespace detail {

inline double patch_sq_dist(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    s += d * d;
  }
  return s;
}

}  // namespace detail

struct TopKMatch {
  std::vector<std::size_t> indices;  // into the candidate grid, ascending score
  std::vector<double> scores;
};

/// The K candidates minimizing α‖g − pred‖² + β‖g − gt‖², ascending;
/// equal scores keep scan order.
inline TopKMatch topk_buddies(std::span<const float> pred, std::span<const float> gt, const PatchGrid& candidates,
                              std::size_t k, double alpha = 1.0, double beta = 1.0) {
  if (pred.size() != gt.size() || pred.size() != candidates.dim())
    throw InvalidInput("topk_buddies: patch sizes differ");
  if (k < 1 || k > candidates.count()) throw InvalidInput("topk_buddies: K must lie in [1, number of candidates]");
  std::vector<std::pair<double, std::size_t>> scored(candidates.count());
  for (std::size_t i = 0; i < candidates.count(); ++i) {
    const auto g = candidates.patch(i);
    scored[i] = {alpha * detail::patch_sq_dist(g, pred) + beta * detail::patch_sq_dist(g, gt), i};
  }
  // (score, index) pairs order exactly like a stable sort on score.
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k), scored.end());
  TopKMatch m;
  for (std::size_t i = 0; i < k; ++i) {
    m.scores.push_back(scored[i].first);
    m.indices.push_back(scored[i].second);
  }
  return m;
}

/// w_k = softmax(−½‖g*_k − pred‖²), max-subtracted.
inline std::vector<double> wks_weights(const TopKMatch& match, std::span<const float> pred, const PatchGrid& candidates) {
  std::vector<double> d(match.indices.size());
  for (std::size_t m = 0; m < d.size(); ++m) d[m] = -0.5 * detail::patch_sq_dist(candidates.patch(match.indices[m]), pred);
  const double dmax = *std::max_element(d.begin(), d.end());
  double z = 0.0;
  for (const double v : d) z += std::exp(v - dmax);
  std::vector<double> w(d.size());
  for (std::size_t m = 0; m < d.size(); ++m) w[m] = std::exp(d[m] - dmax) / z;
  return w;
}

/// Σ_k Σ_e |(g*_k − pred)_e · w_k| for one query patch.
inline double wks_patch_term(std::span<const float> pred, std::span<const float> gt, const PatchGrid& candidates,
                             std::size_t k, double alpha = 1.0, double beta = 1.0) {
  const auto match = topk_buddies(pred, gt, candidates, k, alpha, beta);
  const auto w = wks_weights(match, pred, candidates);
  double term = 0.0;
  for (std::size_t m = 0; m < w.size(); ++m) {
    const auto g = candidates.patch(match.indices[m]);
    for (std::size_t e = 0; e < g.size(); ++e) term += std::abs((static_cast<double>(g[e]) - pred[e]) * w[m]);
  }
  return term;
}

enum class Reduction { kMean, kSum };

inline Reduction reduction_from_name(const std::string& name) {
  if (name == "mean") return Reduction::kMean;
  if (name == "sum") return Reduction::kSum;
  throw InvalidParameter("unknown reduction '" + name + "' (expected mean or sum)");
}

struct WksOptions {
  double alpha = 1.0;
  double beta = 1.0;
  Reduction reduction = Reduction::kMean;
  unsigned threads = 0;  // 0: hardware concurrency
};

struct WksResult {
  double loss = 0.0;
  std::vector<double> patch_terms;  // scan order of the query grid
};

/// Per-patch terms are computed in parallel over query patches and reduced
/// in scan order, so the result does not depend on the thread count.
inline WksResult wks_evaluate(const ImageBuffer& pred, const ImageBuffer& gt, const PatchGrid& candidates, int patch_size,
                              int stride, std::size_t k, const WksOptions& opt = {}) {
  require_same_shape(pred, gt, "wks: pred and gt");
  if (pred.channels() != candidates.channels || patch_size != candidates.patch_size)
    throw InvalidInput("wks: candidate patches do not match the query patches");
  const PatchGrid qp = unfold_patches(pred, patch_size, stride);
  const PatchGrid qg = unfold_patches(gt, patch_size, stride);
  WksResult out;
  out.patch_terms.assign(qp.count(), 0.0);

  unsigned threads = opt.threads ? opt.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, qp.count()));
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i)
      out.patch_terms[i] = wks_patch_term(qp.patch(i), qg.patch(i), candidates, k, opt.alpha, opt.beta);
  };
  // Validate once up front so worker threads never throw.
  if (k < 1 || k > candidates.count()) throw InvalidInput("wks: K must lie in [1, number of candidates]");
  std::vector<std::thread> pool;
  const std::size_t chunk = (qp.count() + threads - 1) / threads;
  for (unsigned t = 1; t < threads; ++t)
    pool.emplace_back(work, std::min(qp.count(), t * chunk), std::min(qp.count(), (t + 1) * chunk));
  work(0, std::min(qp.count(), chunk));
  for (auto& th : pool) th.join();

  for (const double v : out.patch_terms) out.loss += v;
  if (opt.reduction == Reduction::kMean) out.loss /= static_cast<double>(out.patch_terms.size());
  return out;
}

inline WksResult wks_evaluate(const ImageBuffer& pred, const ImageBuffer& gt, const ImageBuffer& real, int patch_size,
                              int stride, std::size_t k, const WksOptions& opt = {}) {
  return wks_evaluate(pred, gt, unfold_patches(real, patch_size, stride), patch_size, stride, k, opt);
}

inline double wks_loss(const ImageBuffer& pred, const ImageBuffer& gt, const ImageBuffer& real, int patch_size, int stride,
                       std::size_t k, const WksOptions& opt = {}) {
  return wks_evaluate(pred, gt, real, patch_size, stride, k, opt).loss;
}

/// Mean absolute difference.
inline double l1_mean(const ImageBuffer& a, const ImageBuffer& b) {
  require_same_shape(a, b, "l1_mean");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(static_cast<double>(a.data()[i]) - b.data()[i]);
  return s / static_cast<double>(a.size());
}

/// L1(full) + 0.1 · (L1(quarter) + L1(eighth)); the coarse targets are
/// bilinear_resize(gt_full, 1/4) and bilinear_resize(gt_full, 1/8).
inline double multiscale_l1(const ImageBuffer& pred_full, const ImageBuffer& pred_quarter, const ImageBuffer& pred_eighth,
                            const ImageBuffer& gt_full) {
  const ImageBuffer gt_quarter = bilinear_resize(gt_full, 0.25);
  const ImageBuffer gt_eighth = bilinear_resize(gt_full, 0.125);
  if (!pred_quarter.same_shape(gt_quarter) || !pred_eighth.same_shape(gt_eighth))
    throw InvalidInput("multiscale_l1: coarse predictions do not match the 1/4 and 1/8 scales of gt");
  return l1_mean(pred_full, gt_full) + 0.1 * (l1_mean(pred_quarter, gt_quarter) + l1_mean(pred_eighth, gt_eighth));
}

}  // namespace nds
