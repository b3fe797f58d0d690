#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "nds/core/error.hpp"

namespace nds {

/// Square, odd-sized, normalized filter taps (row-major; row = vertical offset).
struct Kernel2D {
  int size = 1;
  std::vector<double> taps{1.0};

  int radius() const { return size / 2; }
  double at(int row, int col) const { return taps[static_cast<std::size_t>(row) * size + col]; }
};

namespace detail {

inline void check_kernel_size(int size) {
  if (size < 1 || size % 2 == 0) throw InvalidParameter("kernel size must be a positive odd integer");
}

inline void normalize(Kernel2D& k) {
  double sum = 0.0;
  for (const double t : k.taps) sum += t;
  for (double& t : k.taps) t /= sum;
}

}  // namespace detail

inline Kernel2D delta_kernel() { return {}; }

/// taps ∝ exp(-(x² + y²) / 2σ²) on the centered integer grid.
inline Kernel2D gaussian_kernel_iso(int size, double sigma) {
  detail::check_kernel_size(size);
  if (!(sigma > 0.0)) throw InvalidParameter("gaussian sigma must be positive");
  Kernel2D k{size, std::vector<double>(static_cast<std::size_t>(size) * size)};
  const int r = size / 2;
  for (int y = -r; y <= r; ++y)
    for (int x = -r; x <= r; ++x)
      k.taps[static_cast<std::size_t>(y + r) * size + (x + r)] = std::exp(-(x * x + y * y) / (2.0 * sigma * sigma));
  detail::normalize(k);
  return k;
}

/// Oriented Gaussian: taps ∝ exp(-½ xᵀΣ⁻¹x) with Σ = R(θ) diag(σ_major², σ_minor²) R(θ)ᵀ,
/// x = (column offset, row offset). At θ = 0 the major axis is horizontal.
inline Kernel2D gaussian_kernel_aniso(int size, double sigma_major, double sigma_minor, double angle_deg) {
  detail::check_kernel_size(size);
  if (!(sigma_major > 0.0) || !(sigma_minor > 0.0)) throw InvalidParameter("gaussian sigmas must be positive");
  const double theta = angle_deg * std::numbers::pi / 180.0;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  // Project the offset onto the rotated principal axes.
  Kernel2D k{size, std::vector<double>(static_cast<std::size_t>(size) * size)};
  const int r = size / 2;
  for (int y = -r; y <= r; ++y) {
    for (int x = -r; x <= r; ++x) {
      const double u = c * x + s * y;
      const double v = -s * x + c * y;
      const double q = u * u / (sigma_major * sigma_major) + v * v / (sigma_minor * sigma_minor);
      k.taps[static_cast<std::size_t>(y + r) * size + (x + r)] = std::exp(-0.5 * q);
    }
  }
  detail::normalize(k);
  return k;
}

}  // namespace nds
