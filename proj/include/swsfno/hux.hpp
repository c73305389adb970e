#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "swsfno/core.hpp"
#include "swsfno/cube.hpp"
#include "swsfno/grid.hpp"

// Heliospheric upwind extrapolation of v_r (HUX), forward and backward.
namespace swsfno::hux {

inline constexpr double kSiderealRotationDays = 25.38;

struct HuxParams {
  double omega_rot = kTwoPi / (kSiderealRotationDays * 86400.0);  // rad/s
  double alpha = 0.15;
  double r_h = 50.0;  // solar radii
  bool add_acceleration = true;
  // Forward march takes the eastward (k+1) neighbour; false takes k-1.
  bool upwind_east = true;

  void validate() const {
    if (!(omega_rot > 0.0)) throw InvalidArgument("HuxParams: omega_rot must be > 0");
    if (!(r_h > 0.0)) throw InvalidArgument("HuxParams: r_h must be > 0");
    if (!(alpha >= 0.0 && alpha < 1.0)) throw InvalidArgument("HuxParams: alpha must be in [0, 1)");
  }
};

/// Multiplicative boost 1 + alpha (1 - exp(-(r - r0) / r_h)).
inline double acceleration_factor(double r, double r0, double alpha, double r_h) {
  return 1.0 + alpha * (1.0 - std::exp(-(r - r0) / r_h));
}

inline double accelerate(double v0, double r, double r0, const HuxParams& p) {
  return v0 * acceleration_factor(r, r0, p.alpha, p.r_h);
}

/// Courant number of one radial step: dr * Omega / (v * dphi), dr in solar radii.
inline double cfl_ratio(double dr_rsun, double v, double omega, double dphi) {
  return dr_rsun * kSolarRadiusKm * omega / (v * dphi);
}

struct HuxDiagnostics {
  double max_cfl = 0.0;
};

namespace detail {

inline std::size_t wrap(std::ptrdiff_t k, std::size_t n) {
  const auto nn = static_cast<std::ptrdiff_t>(n);
  return static_cast<std::size_t>(((k % nn) + nn) % nn);
}

inline void check_boundary(std::span<const double> b, const SphericalGrid& grid) {
  if (b.size() != grid.size())
    throw ShapeError("hux: boundary has " + std::to_string(b.size()) + " values, grid needs " +
                     std::to_string(grid.size()));
  for (double v : b)
    if (!std::isfinite(v) || v <= 0.0)
      throw InvalidArgument("hux: boundary values must be finite and positive");
}

[[noreturn]] inline void raise_cfl(std::size_t i, std::size_t j, std::size_t k, double ratio,
                                   double v, double dr) {
  std::ostringstream msg;
  msg << "hux: CFL violation at radius step " << i << ", lat " << j << ", lon " << k
      << ": ratio " << ratio << " > 1 (v = " << v << " km/s, dr = " << dr << " Rsun)";
  throw StabilityError(msg.str(), i, j, k, ratio);
}

// Upwind march of the unaccelerated field from slice `from` toward `to`
// (to = from +/- 1), writing into cube.
inline void upwind_step(VelocityCube& cube, std::size_t from, std::size_t to, double dr,
                        int neighbour, const HuxParams& p, HuxDiagnostics& diag) {
  const std::size_t nl = cube.n_lat(), nlon = cube.n_lon();
  const double dphi = cube.grid.lon_step();
  const double coef = dr * kSolarRadiusKm * p.omega_rot / dphi;
  for (std::size_t j = 0; j < nl; ++j) {
    for (std::size_t k = 0; k < nlon; ++k) {
      const double v = cube.at(from, j, k);
      const double c = coef / v;
      if (c > diag.max_cfl) diag.max_cfl = c;
      if (c > 1.0) raise_cfl(std::min(from, to), j, k, c, v, dr);
      const double vn = cube.at(from, j, wrap(static_cast<std::ptrdiff_t>(k) + neighbour, nlon));
      cube.at(to, j, k) = v + c * (vn - v);
    }
  }
}

inline void apply_acceleration(VelocityCube& cube, std::span<const double> alpha_per_row,
                               double r_h) {
  const double r0 = cube.radial.inner();
  for (std::size_t i = 1; i < cube.n_r(); ++i)
    for (std::size_t j = 0; j < cube.n_lat(); ++j) {
      const double f = acceleration_factor(cube.radial[i], r0, alpha_per_row[j], r_h);
      for (std::size_t k = 0; k < cube.n_lon(); ++k) cube.at(i, j, k) *= f;
    }
}

}  // namespace detail

/// Forward march from the inner boundary. Rows may carry their own
/// acceleration amplitude; an empty span uses p.alpha everywhere.
///
/// The unaccelerated field is advected with
///   v[i+1][k] = v[i][k] + (dr_i Omega / v[i][k]) (v[i][k+1] - v[i][k]) / dphi
/// and slice i is then scaled by the acceleration factor at r_i.
inline VelocityCube hux_f(std::span<const double> boundary, const RadialGrid& radial,
                          const SphericalGrid& grid, const HuxParams& p,
                          std::span<const double> alpha_per_row = {},
                          HuxDiagnostics* diag = nullptr) {
  p.validate();
  detail::check_boundary(boundary, grid);
  if (!alpha_per_row.empty() && alpha_per_row.size() != grid.n_lat())
    throw ShapeError("hux_f: alpha_per_row must have n_lat entries");

  VelocityCube cube(radial, grid);
  std::copy(boundary.begin(), boundary.end(), cube.slice(0).begin());
  HuxDiagnostics local;
  const int neighbour = p.upwind_east ? 1 : -1;
  for (std::size_t i = 0; i + 1 < radial.size(); ++i)
    detail::upwind_step(cube, i, i + 1, radial.dr(i), neighbour, p, local);

  if (p.add_acceleration) {
    std::vector<double> alphas(grid.n_lat(), p.alpha);
    if (!alpha_per_row.empty()) alphas.assign(alpha_per_row.begin(), alpha_per_row.end());
    detail::apply_acceleration(cube, alphas, p.r_h);
  }
  if (diag) *diag = local;
  return cube;
}

/// Backward march from the outermost shell toward r0, upwinding from the
/// opposite side so each step is a convex combination. The outer slice is
/// de-accelerated first and every slice re-accelerated afterwards.
inline VelocityCube hux_b(std::span<const double> outer, const RadialGrid& radial,
                          const SphericalGrid& grid, const HuxParams& p,
                          HuxDiagnostics* diag = nullptr) {
  p.validate();
  detail::check_boundary(outer, grid);
  const std::size_t last = radial.size() - 1;
  VelocityCube cube(radial, grid);
  const double f_last = p.add_acceleration
                            ? acceleration_factor(radial.outer(), radial.inner(), p.alpha, p.r_h)
                            : 1.0;
  auto top = cube.slice(last);
  for (std::size_t c = 0; c < top.size(); ++c) top[c] = outer[c] / f_last;

  HuxDiagnostics local;
  const int neighbour = p.upwind_east ? -1 : 1;
  for (std::size_t i = last; i > 0; --i)
    detail::upwind_step(cube, i, i - 1, radial.dr(i - 1), neighbour, p, local);

  if (p.add_acceleration) {
    std::vector<double> alphas(grid.n_lat(), p.alpha);
    detail::apply_acceleration(cube, alphas, p.r_h);
  }
  if (diag) *diag = local;
  return cube;
}

}  // namespace swsfno::hux
