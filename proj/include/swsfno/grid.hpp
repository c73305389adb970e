#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "swsfno/core.hpp"

namespace swsfno {

struct GaussLegendreRule {
  std::vector<double> nodes;    // ascending on (-1, 1)
  std::vector<double> weights;  // positive, sum to 2
};

/// Gauss-Legendre nodes and weights on [-1, 1].
///
/// Newton iteration on P_n from Chebyshev initial guesses. Nodes are returned
/// in ascending order; symmetry is enforced by computing the upper half and
/// mirroring.
inline GaussLegendreRule gauss_legendre(std::size_t n) {
  if (n == 0) throw InvalidArgument("gauss_legendre: n must be >= 1");

  constexpr double kTol = 1e-15;
  constexpr int kMaxIter = 100;

  GaussLegendreRule rule;
  rule.nodes.assign(n, 0.0);
  rule.weights.assign(n, 0.0);

  const double dn = static_cast<double>(n);
  const std::size_t half = (n + 1) / 2;
  for (std::size_t i = 0; i < half; ++i) {
    // i-th largest root; Chebyshev-type initial guess.
    double x = std::cos(kPi * (static_cast<double>(i) + 0.75) / (dn + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < kMaxIter; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (std::size_t k = 2; k <= n; ++k) {
        const double dk = static_cast<double>(k);
        const double p2 = ((2.0 * dk - 1.0) * x * p1 - (dk - 1.0) * p0) / dk;
        p0 = p1;
        p1 = p2;
      }
      // p1 = P_n(x), p0 = P_{n-1}(x)
      dp = n == 1 ? 1.0 : dn * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) <= kTol) break;
    }
    // Recompute derivative at the converged node for the weight.
    {
      double p0 = 1.0;
      double p1 = x;
      for (std::size_t k = 2; k <= n; ++k) {
        const double dk = static_cast<double>(k);
        const double p2 = ((2.0 * dk - 1.0) * x * p1 - (dk - 1.0) * p0) / dk;
        p0 = p1;
        p1 = p2;
      }
      dp = n == 1 ? 1.0 : dn * (x * p1 - p0) / (x * x - 1.0);
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    const std::size_t hi = n - 1 - i;
    rule.nodes[hi] = x;
    rule.nodes[i] = -x;
    rule.weights[hi] = w;
    rule.weights[i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

/// Latitude/longitude sampling: Gauss-Legendre colatitudes, uniform periodic
/// longitudes. Row j has colatitude colatitudes[j]; rows run from near the
/// south pole (x = cos(theta) ascending) to near the north pole.
class SphericalGrid {
 public:
  SphericalGrid() = default;

  std::size_t n_lat() const noexcept { return n_lat_; }
  std::size_t n_lon() const noexcept { return n_lon_; }
  std::size_t size() const noexcept { return n_lat_ * n_lon_; }
  double lon_step() const noexcept { return lon_step_; }
  const std::vector<double>& colatitudes() const noexcept { return colat_; }
  const std::vector<double>& cos_colatitudes() const noexcept { return x_; }
  const std::vector<double>& quad_weights() const noexcept { return weights_; }
  const std::vector<double>& longitudes() const noexcept { return lon_; }

  /// Latitude in radians of row j (pi/2 - colatitude).
  double latitude(std::size_t j) const { return 0.5 * kPi - colat_[j]; }

  bool operator==(const SphericalGrid& o) const {
    return n_lat_ == o.n_lat_ && n_lon_ == o.n_lon_;
  }

  friend SphericalGrid make_grid(std::size_t n_lat, std::size_t n_lon);

 private:
  std::size_t n_lat_ = 0;
  std::size_t n_lon_ = 0;
  double lon_step_ = 0.0;
  std::vector<double> x_;
  std::vector<double> colat_;
  std::vector<double> weights_;
  std::vector<double> lon_;
};

inline SphericalGrid make_grid(std::size_t n_lat, std::size_t n_lon) {
  if (n_lat < 2) throw InvalidArgument("make_grid: n_lat must be >= 2");
  if (n_lon < 2) throw InvalidArgument("make_grid: n_lon must be >= 2");
  if (n_lon % 2 != 0)
    throw InvalidArgument("make_grid: n_lon must be even, got " + std::to_string(n_lon));

  SphericalGrid g;
  g.n_lat_ = n_lat;
  g.n_lon_ = n_lon;
  g.lon_step_ = kTwoPi / static_cast<double>(n_lon);
  auto rule = gauss_legendre(n_lat);
  g.x_ = std::move(rule.nodes);
  g.weights_ = std::move(rule.weights);
  g.colat_.resize(n_lat);
  for (std::size_t j = 0; j < n_lat; ++j) g.colat_[j] = std::acos(g.x_[j]);
  g.lon_.resize(n_lon);
  for (std::size_t k = 0; k < n_lon; ++k) g.lon_[k] = g.lon_step_ * static_cast<double>(k);
  return g;
}

/// Fresh Gauss grid at factor x the resolution in both directions.
inline SphericalGrid refine(const SphericalGrid& grid, std::size_t factor) {
  if (factor != 2 && factor != 4)
    throw InvalidArgument("refine: factor must be 2 or 4, got " + std::to_string(factor));
  return make_grid(grid.n_lat() * factor, grid.n_lon() * factor);
}

/// Radial shells in solar radii. Uniform by default; explicit (possibly
/// nonuniform) radii are accepted from cube files.
class RadialGrid {
 public:
  static constexpr double kInnerRadius = 30.0;
  static constexpr double kOuterRadius = 236.0;

  RadialGrid() = default;

  static RadialGrid uniform(std::size_t n_r, double r0 = kInnerRadius,
                            double r_max = kOuterRadius) {
    if (n_r < 2) throw InvalidArgument("RadialGrid: n_r must be >= 2");
    if (!(r_max > r0)) throw InvalidArgument("RadialGrid: r_max must exceed r0");
    std::vector<double> r(n_r);
    const double dr = (r_max - r0) / static_cast<double>(n_r - 1);
    for (std::size_t i = 0; i < n_r; ++i) r[i] = r0 + dr * static_cast<double>(i);
    r.back() = r_max;
    return RadialGrid(std::move(r));
  }

  static RadialGrid from_radii(std::vector<double> r) {
    if (r.empty()) throw InvalidArgument("RadialGrid: no radii");
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (!std::isfinite(r[i]) || r[i] <= 0.0)
        throw InvalidArgument("RadialGrid: radii must be finite and positive");
      if (i > 0 && !(r[i] > r[i - 1]))
        throw InvalidArgument("RadialGrid: radii must be strictly increasing");
    }
    return RadialGrid(std::move(r));
  }

  std::size_t size() const noexcept { return r_.size(); }
  const std::vector<double>& radii() const noexcept { return r_; }
  double operator[](std::size_t i) const { return r_[i]; }
  double inner() const { return r_.front(); }
  double outer() const { return r_.back(); }

  // Width of interval i (between shells i and i+1), solar radii.
  double dr(std::size_t i) const { return r_[i + 1] - r_[i]; }

  bool operator==(const RadialGrid& o) const { return r_ == o.r_; }

 private:
  explicit RadialGrid(std::vector<double> r) : r_(std::move(r)) {}
  std::vector<double> r_;
};

}  // namespace swsfno
