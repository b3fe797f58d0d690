#pragma once

// Reference-view selection by ray/sphere overlap.
//
// Rays from each camera are intersected with a sphere standing in for the
// scene. Two views whose hit point sets lie close together in both
// directions see the same part of the scene. The directed cost is the sum
// of squared nearest-neighbor distances and the mutual cost adds both
// directions.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <set>
#include <thread>
#include <vector>

#include "nds/core/error.hpp"
#include "nds/viewsel/pose.hpp"

namespace nds {

struct BoundingSphere {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  double radius = 1.0;
};

struct RayHitSet {
  std::vector<Eigen::Vector3d> points;
  int source_view = -1;
};

inline constexpr double kInfiniteCost = std::numeric_limits<double>::infinity();

/// Least-squares point closest to every optical axis; radius is rho times
/// the median center-to-camera distance, kept below 0.999 of the nearest
/// camera so every camera stays strictly outside.
inline BoundingSphere estimate_sphere(const std::vector<CameraPose>& cams, double rho = 0.7) {
  if (cams.size() < 2) throw InvalidInput("estimate_sphere: at least two cameras are required");
  if (!(rho > 0.0)) throw InvalidParameter("estimate_sphere: rho must be positive");
  Eigen::Matrix3d a = Eigen::Matrix3d::Zero();
  Eigen::Vector3d b = Eigen::Vector3d::Zero();
  for (const auto& c : cams) {
    const Eigen::Vector3d d = c.optical_axis().normalized();
    const Eigen::Matrix3d p = Eigen::Matrix3d::Identity() - d * d.transpose();
    a += p;
    b += p * c.center;
  }
  // All axes parallel makes `a` rank 2 and the point undetermined.
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(a);
  const auto& ev = eig.eigenvalues();
  if (ev(0) <= 1e-9 * ev(2)) throw DegenerateGeometry("estimate_sphere: optical axes do not constrain a center");
  BoundingSphere s;
  s.center = a.ldlt().solve(b);

  std::vector<double> dist;
  for (const auto& c : cams) dist.push_back((c.center - s.center).norm());
  std::sort(dist.begin(), dist.end());
  const std::size_t n = dist.size();
  const double median = n % 2 ? dist[n / 2] : 0.5 * (dist[n / 2 - 1] + dist[n / 2]);
  if (!(dist.front() > 0.0)) throw DegenerateGeometry("estimate_sphere: a camera sits on the estimated center");
  s.radius = std::min(rho * median, 0.999 * dist.front());
  return s;
}

/// First intersections of grid_n × grid_n rays through pixel centers
/// ((k + 0.5) · W / n, (l + 0.5) · H / n). Rays that miss are dropped.
inline RayHitSet cast_rays(const CameraPose& cam, const BoundingSphere& sphere, int grid_n, int source_view = -1) {
  if (grid_n < 2) throw InvalidParameter("cast_rays: grid_n must be >= 2");
  if (!(sphere.radius > 0.0)) throw InvalidParameter("cast_rays: sphere radius must be positive");
  RayHitSet hits;
  hits.source_view = source_view;
  const Eigen::Vector3d oc = cam.center - sphere.center;
  const double c = oc.squaredNorm() - sphere.radius * sphere.radius;
  for (int l = 0; l < grid_n; ++l) {
    const double v = (l + 0.5) * cam.image_h / grid_n;
    for (int k = 0; k < grid_n; ++k) {
      const double u = (k + 0.5) * cam.image_w / grid_n;
      const Eigen::Vector3d d = cam.ray_direction(u, v);
      // |o + t d - c|² = r² with |d| = 1: t² + 2 b t + c = 0.
      const double b = d.dot(oc);
      const double disc = b * b - c;
      if (disc < 0.0) continue;
      const double root = std::sqrt(disc);
      double t = -b - root;
      if (!(t > 0.0)) t = -b + root;
      if (!(t > 0.0)) continue;
      const Eigen::Vector3d p = cam.center + t * d;
      // Snap back onto the surface to remove rounding drift.
      hits.points.push_back(sphere.center + (p - sphere.center) * (sphere.radius / (p - sphere.center).norm()));
    }
  }
  return hits;
}

namespace detail {

inline double sq_dist3(const Eigen::Vector3d& p, const Eigen::Vector3d& q) {
  const double dx = p.x() - q.x(), dy = p.y() - q.y(), dz = p.z() - q.z();
  return dx * dx + dy * dy + dz * dz;
}

/// Exact nearest-neighbor k-d tree. A subtree is skipped only when the
/// squared distance to its splitting plane already exceeds the best match;
/// points across the plane are at least that far under round-to-nearest,
/// so the minimum equals the brute-force one bitwise.
class KdTree {
 public:
  explicit KdTree(const std::vector<Eigen::Vector3d>& pts) : pts_(pts), order_(pts.size()) {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    nodes_.reserve(2 * pts.size() / kLeafSize + 2);
    build(0, order_.size());
  }

  double nearest_sq(const Eigen::Vector3d& q) const {
    double best = kInfiniteCost;
    search(0, q, best);
    return best;
  }

 private:
  static constexpr std::size_t kLeafSize = 8;

  struct Node {
    std::size_t begin, end;  // range in order_
    int axis = -1;           // -1 for leaves
    double split = 0.0;
    std::size_t left = 0, right = 0;
  };

  std::size_t build(std::size_t begin, std::size_t end) {
    const std::size_t id = nodes_.size();
    nodes_.push_back({begin, end});
    if (end - begin <= kLeafSize) return id;
    Eigen::Vector3d lo = pts_[order_[begin]], hi = lo;
    for (std::size_t i = begin; i < end; ++i) {
      lo = lo.cwiseMin(pts_[order_[i]]);
      hi = hi.cwiseMax(pts_[order_[i]]);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::size_t x, std::size_t y) { return pts_[x](axis) < pts_[y](axis); });
    // Left holds coordinates <= split, right holds >= split.
    const double split = pts_[order_[mid]](axis);
    const std::size_t left = build(begin, mid);
    const std::size_t right = build(mid, end);
    nodes_[id].axis = axis;
    nodes_[id].split = split;
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

  void search(std::size_t id, const Eigen::Vector3d& q, double& best) const {
    const Node& n = nodes_[id];
    if (n.axis < 0) {
      for (std::size_t i = n.begin; i < n.end; ++i) best = std::min(best, sq_dist3(q, pts_[order_[i]]));
      return;
    }
    const double diff = q(n.axis) - n.split;
    const std::size_t near = diff <= 0.0 ? n.left : n.right;
    const std::size_t far = diff <= 0.0 ? n.right : n.left;
    search(near, q, best);
    if (diff * diff <= best) search(far, q, best);
  }

  const std::vector<Eigen::Vector3d>& pts_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace detail

/// Point count above which kAuto queries go through a k-d tree.
inline constexpr std::size_t kBruteForceLimit = 1000;

enum class NearestSearch { kAuto, kBruteForce, kTree };

/// Σ_{p ∈ a} min_{q ∈ b} ‖p − q‖². Infinite when b is empty. Both search
/// strategies give bitwise-identical sums.
inline double directed_cost(const RayHitSet& a, const RayHitSet& b, NearestSearch search = NearestSearch::kAuto) {
  if (b.points.empty()) return kInfiniteCost;
  double total = 0.0;
  const bool brute = search == NearestSearch::kBruteForce ||
                     (search == NearestSearch::kAuto && b.points.size() <= kBruteForceLimit);
  if (brute) {
    for (const auto& p : a.points) {
      double best = kInfiniteCost;
      for (const auto& q : b.points) best = std::min(best, detail::sq_dist3(p, q));
      total += best;
    }
    return total;
  }
  const detail::KdTree tree(b.points);
  for (const auto& p : a.points) total += tree.nearest_sq(p);
  return total;
}

/// C(a→b) + C(b→a); symmetric, infinite when either side is empty.
inline double mutual_cost(const RayHitSet& a, const RayHitSet& b, NearestSearch search = NearestSearch::kAuto) {
  if (a.points.empty() || b.points.empty()) return kInfiniteCost;
  return directed_cost(a, b, search) + directed_cost(b, a, search);
}

struct SelectConfig {
  int grid_n = 16;
  std::optional<BoundingSphere> sphere;  // estimated from the rig when absent
  double rho = 0.7;
};

/// Hit sets for every camera against one shared sphere.
inline std::vector<RayHitSet> cast_all(const std::vector<CameraPose>& cams, const BoundingSphere& sphere, int grid_n) {
  std::vector<RayHitSet> hits;
  hits.reserve(cams.size());
  for (std::size_t i = 0; i < cams.size(); ++i) hits.push_back(cast_rays(cams[i], sphere, grid_n, static_cast<int>(i)));
  return hits;
}

/// Symmetric N×N mutual-cost table, filled by `threads` workers over rows.
/// Each entry is computed independently, so the table does not depend on
/// scheduling.
inline std::vector<std::vector<double>> cost_matrix(const std::vector<RayHitSet>& hits, unsigned threads = 0) {
  const std::size_t n = hits.size();
  std::vector<std::vector<double>> m(n, std::vector<double>(n, 0.0));
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
  auto work = [&](unsigned t) {
    for (std::size_t i = t; i < n; i += threads)
      for (std::size_t j = i + 1; j < n; ++j) m[i][j] = mutual_cost(hits[i], hits[j]);
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(work, t);
  work(0);
  for (auto& th : pool) th.join();
  for (std::size_t i = 0; i < n; ++i) {
    m[i][i] = hits[i].points.empty() ? kInfiniteCost : 0.0;
    for (std::size_t j = 0; j < i; ++j) m[i][j] = m[j][i];
  }
  return m;
}

/// The k views with the least mutual cost to `target`, ascending by cost;
/// equal costs go to the lower index. `target` and `exclude` are never
/// returned.
inline std::vector<int> select_references(const std::vector<CameraPose>& cams, int target, int k,
                                          const std::set<int>& exclude = {}, const SelectConfig& cfg = {}) {
  const int n = static_cast<int>(cams.size());
  if (target < 0 || target >= n) throw InvalidInput("select_references: target index out of range");
  if (k < 1) throw InvalidParameter("select_references: k must be >= 1");
  std::vector<int> candidates;
  for (int i = 0; i < n; ++i)
    if (i != target && !exclude.count(i)) candidates.push_back(i);
  if (static_cast<int>(candidates.size()) < k) throw InvalidInput("select_references: not enough candidate views");
  for (const auto& c : cams) validate_pose(c);

  const BoundingSphere sphere = cfg.sphere ? *cfg.sphere : estimate_sphere(cams, cfg.rho);
  const RayHitSet t = cast_rays(cams[target], sphere, cfg.grid_n, target);
  std::vector<double> cost(n, kInfiniteCost);
  for (const int i : candidates) cost[i] = mutual_cost(t, cast_rays(cams[i], sphere, cfg.grid_n, i));
  std::stable_sort(candidates.begin(), candidates.end(), [&](int a, int b) { return cost[a] < cost[b]; });
  candidates.resize(k);
  return candidates;
}

}  // namespace nds
