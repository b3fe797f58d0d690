#pragma once

// Classical corpus statistics for comparing simulated against real renders.
//
// This is a cheap proxy for feature-space comparisons: each corpus is
// summarized by histograms of luminance gradient magnitude, local
// luminance variance and per-channel intensity, and two corpora are
// compared by the Wasserstein-1 distance between matching histograms.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nds/core/error.hpp"
#include "nds/core/image.hpp"
#include "nds/core/io.hpp"
#include "nds/pipeline/dataset.hpp"

namespace nds {

struct QualityConfig {
  int bins = 64;
  double gradient_max = 0.75;  // central differences keep |∇Y| below √2 / 2
  double variance_max = 0.0625;
  int variance_window = 5;
  unsigned threads = 0;
  std::string name_contains;  // when set, only files whose name contains it
};

struct Histogram {
  double lo = 0.0, hi = 1.0;
  std::vector<std::uint64_t> counts;

  Histogram() = default;
  Histogram(double lo_, double hi_, int bins) : lo(lo_), hi(hi_), counts(static_cast<std::size_t>(bins), 0) {}

  /// Out-of-range values land in the first or last bin.
  void add(double v) {
    const double t = (v - lo) / (hi - lo) * static_cast<double>(counts.size());
    const auto b = static_cast<std::ptrdiff_t>(std::floor(t));
    ++counts[static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(b, 0, static_cast<std::ptrdiff_t>(counts.size()) - 1))];
  }

  void merge(const Histogram& o) {
    for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += o.counts[i];
  }

  std::uint64_t total() const {
    std::uint64_t t = 0;
    for (const auto c : counts) t += c;
    return t;
  }
};

/// W1 between two histograms over the same bins: Σ |CDF_a − CDF_b| · width.
inline double wasserstein1(const Histogram& a, const Histogram& b) {
  if (a.counts.size() != b.counts.size() || a.lo != b.lo || a.hi != b.hi)
    throw InvalidInput("wasserstein1: histograms use different bins");
  const double ta = static_cast<double>(a.total()), tb = static_cast<double>(b.total());
  if (ta == 0.0 || tb == 0.0) throw InvalidInput("wasserstein1: empty histogram");
  const double width = (a.hi - a.lo) / static_cast<double>(a.counts.size());
  // Integer running sums keep the result exactly zero for identical inputs.
  std::uint64_t ca = 0, cb = 0;
  double d = 0.0;
  for (std::size_t i = 0; i < a.counts.size(); ++i) {
    ca += a.counts[i];
    cb += b.counts[i];
    d += std::abs(static_cast<double>(ca) / ta - static_cast<double>(cb) / tb) * width;
  }
  return d;
}

struct CorpusStats {
  std::size_t images = 0;
  Histogram gradient, variance;
  std::array<Histogram, 3> intensity;
  std::array<double, 3> mean{}, stddev{};
};

namespace detail {

inline double luma(const ImageBuffer& img, int r, int c) {
  return 0.2126 * img.at(r, c, 0) + 0.7152 * img.at(r, c, 1) + 0.0722 * img.at(r, c, 2);
}

struct ImageStats {
  Histogram gradient, variance;
  std::array<Histogram, 3> intensity;
  std::array<double, 3> sum{}, sum_sq{};
  std::uint64_t pixels = 0;
};

inline ImageStats image_stats(const ImageBuffer& img, const QualityConfig& cfg) {
  ImageStats s{Histogram(0.0, cfg.gradient_max, cfg.bins), Histogram(0.0, cfg.variance_max, cfg.bins), {}, {}, {}, 0};
  for (auto& h : s.intensity) h = Histogram(0.0, 1.0, 256);
  const int h = img.height(), w = img.width();
  std::vector<double> y(static_cast<std::size_t>(h) * w);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      y[static_cast<std::size_t>(r) * w + c] = luma(img, r, c);
      for (int k = 0; k < 3; ++k) {
        const double v = img.at(r, c, k);
        s.intensity[k].add(v);
        s.sum[k] += v;
        s.sum_sq[k] += v * v;
      }
    }
  s.pixels = static_cast<std::uint64_t>(h) * w;
  auto at = [&](int r, int c) {
    return y[static_cast<std::size_t>(std::clamp(r, 0, h - 1)) * w + std::clamp(c, 0, w - 1)];
  };
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const double gx = 0.5 * (at(r, c + 1) - at(r, c - 1));
      const double gy = 0.5 * (at(r + 1, c) - at(r - 1, c));
      s.gradient.add(std::sqrt(gx * gx + gy * gy));
    }
  // Variance over every fully contained window.
  const int n = cfg.variance_window;
  for (int r = 0; r + n <= h; ++r)
    for (int c = 0; c + n <= w; ++c) {
      double m = 0.0, m2 = 0.0;
      for (int i = r; i < r + n; ++i)
        for (int j = c; j < c + n; ++j) {
          m += at(i, j);
          m2 += at(i, j) * at(i, j);
        }
      const double cnt = static_cast<double>(n) * n;
      s.variance.add(std::max(0.0, m2 / cnt - (m / cnt) * (m / cnt)));
    }
  return s;
}

}  // namespace detail

/// Image files anywhere below `dir`, sorted by relative path.
inline std::vector<std::filesystem::path> list_images_recursive(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw InvalidInput("not a directory: " + dir.string());
  std::vector<std::filesystem::path> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir))
    if (e.is_regular_file() && is_image_path(e.path())) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

inline CorpusStats corpus_stats(const std::vector<ImageBuffer>& images, const QualityConfig& cfg = {}) {
  if (images.empty()) throw InvalidInput("quality report: empty corpus");
  if (cfg.bins < 2 || cfg.variance_window < 2) throw InvalidParameter("quality report: bins and window must be >= 2");
  std::vector<detail::ImageStats> per(images.size());
  parallel_for(images.size(), resolve_threads(cfg.threads), [&](std::size_t i) {
    if (images[i].channels() != 3) throw InvalidInput("quality report: images must be RGB");
    per[i] = detail::image_stats(images[i], cfg);
  });
  CorpusStats out;
  out.images = images.size();
  out.gradient = Histogram(0.0, cfg.gradient_max, cfg.bins);
  out.variance = Histogram(0.0, cfg.variance_max, cfg.bins);
  for (auto& h : out.intensity) h = Histogram(0.0, 1.0, 256);
  std::array<double, 3> sum{}, sum_sq{};
  std::uint64_t pixels = 0;
  for (const auto& s : per) {  // fixed order keeps the float sums reproducible
    out.gradient.merge(s.gradient);
    out.variance.merge(s.variance);
    for (int k = 0; k < 3; ++k) {
      out.intensity[k].merge(s.intensity[k]);
      sum[k] += s.sum[k];
      sum_sq[k] += s.sum_sq[k];
    }
    pixels += s.pixels;
  }
  for (int k = 0; k < 3; ++k) {
    out.mean[k] = sum[k] / static_cast<double>(pixels);
    out.stddev[k] = std::sqrt(std::max(0.0, sum_sq[k] / static_cast<double>(pixels) - out.mean[k] * out.mean[k]));
  }
  return out;
}

struct QualityDistances {
  double gradient_w1 = 0.0;
  double variance_w1 = 0.0;
  std::array<double, 3> intensity_w1{};
  double aggregate = 0.0;  // range-normalized W1s, averaged
};

/// Symmetric in its arguments; zero for identical statistics.
inline QualityDistances compare(const CorpusStats& a, const CorpusStats& b) {
  QualityDistances d;
  d.gradient_w1 = wasserstein1(a.gradient, b.gradient);
  d.variance_w1 = wasserstein1(a.variance, b.variance);
  double intensity = 0.0;
  for (int k = 0; k < 3; ++k) {
    d.intensity_w1[k] = wasserstein1(a.intensity[k], b.intensity[k]);
    intensity += d.intensity_w1[k];
  }
  d.aggregate = (d.gradient_w1 / (a.gradient.hi - a.gradient.lo) + d.variance_w1 / (a.variance.hi - a.variance.lo) +
                 intensity / 3.0) /
                3.0;
  return d;
}

inline nlohmann::json to_json(const CorpusStats& s) {
  auto hist = [](const Histogram& h) {
    return nlohmann::json{{"lo", h.lo}, {"hi", h.hi}, {"counts", h.counts}};
  };
  return {{"images", s.images},
          {"gradient_hist", hist(s.gradient)},
          {"variance_hist", hist(s.variance)},
          {"mean", s.mean},
          {"std", s.stddev}};
}

inline nlohmann::json to_json(const QualityDistances& d) {
  return {{"gradient_w1", d.gradient_w1},
          {"variance_w1", d.variance_w1},
          {"intensity_w1", d.intensity_w1},
          {"aggregate", d.aggregate}};
}

inline std::vector<ImageBuffer> load_corpus(const std::filesystem::path& dir, const std::string& name_contains = {}) {
  std::vector<ImageBuffer> images;
  for (const auto& p : list_images_recursive(dir))
    if (p.filename().string().find(name_contains) != std::string::npos) images.push_back(read_rgb(p));
  if (images.empty()) throw InvalidInput("quality report: no images under " + dir.string());
  return images;
}

inline nlohmann::json quality_report(const std::filesystem::path& sim_dir, const std::filesystem::path& real_dir,
                                     const QualityConfig& cfg = {}) {
  const auto sim = corpus_stats(load_corpus(sim_dir, cfg.name_contains), cfg);
  const auto real = corpus_stats(load_corpus(real_dir, cfg.name_contains), cfg);
  return {{"sim", to_json(sim)}, {"real", to_json(real)}, {"distances", to_json(compare(sim, real))}};
}

}  // namespace nds
