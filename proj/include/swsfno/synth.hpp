#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "swsfno/core.hpp"
#include "swsfno/cube.hpp"
#include "swsfno/grid.hpp"
#include "swsfno/hux.hpp"
#include "swsfno/sht.hpp"

namespace swsfno {

inline constexpr double kSynthSlowWind = 250.0;
inline constexpr double kSynthFastWind = 750.0;

/// Band-limited random inner-boundary field on [250, 750] km/s.
///
/// Coefficients a_lm ~ N(0, 1) / (1 + l) for l <= l_band pass through the
/// inverse SHT; the result, scaled by its expected RMS, goes through
/// 250 + 500 * sigmoid(gain * g). The scaling does not depend on the draw,
/// so l_band = 0 yields a constant field.
inline std::vector<double> synth_boundary(std::uint64_t seed, const SphericalGrid& grid,
                                          std::size_t l_band, double gain = 3.0) {
  if (l_band + 1 > grid.n_lat())
    throw InvalidArgument("synth_boundary: l_band " + std::to_string(l_band) +
                          " exceeds n_lat - 1");
  const std::size_t m_cap = std::min(l_band, grid.n_lon() / 2);
  const ShtPlan plan(grid, l_band, m_cap);
  SpectralCoeffs coeffs(l_band, m_cap, 1);
  Rng rng(seed);
  double expected_var = 0.0;
  for (std::size_t l = 0; l <= l_band; ++l) {
    const double amp = 1.0 / (1.0 + static_cast<double>(l));
    for (std::size_t m = 0; m <= std::min(l, m_cap); ++m) {
      const bool real_only = m == 0 || 2 * m == grid.n_lon();
      const double re = rng.normal();
      const double im = real_only ? 0.0 : rng.normal();
      const double s = real_only ? amp : amp / std::sqrt(2.0);
      coeffs.at(0, l, m) = cplx(s * re, s * im);
    }
    expected_var += amp * amp * (2.0 * static_cast<double>(l) + 1.0) / (4.0 * kPi);
  }
  auto g = plan.inverse(coeffs);
  // The l = 0 term alone carries 1/(4 pi) of variance but no spatial structure;
  // exclude it from the scale unless it is all there is.
  const double structured = expected_var - 1.0 / (4.0 * kPi);
  const double scale = gain / std::sqrt(structured > 0.0 ? structured : expected_var);
  for (double& v : g) {
    const double s = 1.0 / (1.0 + std::exp(-scale * v));
    v = kSynthSlowWind + (kSynthFastWind - kSynthSlowWind) * s;
  }
  return g;
}

/// Smooth longitudinal shear applied to synthetic truth: slice i, row j is
/// displaced eastward by amplitude * ((r_i - r0)/(r_max - r0)) * profile(lat_j)
/// radians, with profile = sin(lat) + bias.
struct ShearWarp {
  double amplitude = 0.0;  // radians at the outer shell
  double bias = 0.0;

  bool identity() const { return amplitude == 0.0; }
};

/// Periodic linear-interpolation shift of one row by `shift` radians eastward.
inline void shift_row(std::span<double> row, double shift, double dphi) {
  const std::size_t n = row.size();
  std::vector<double> src(row.begin(), row.end());
  const double cells = shift / dphi;
  const double fl = std::floor(cells);
  const double frac = cells - fl;
  const auto base = static_cast<std::ptrdiff_t>(fl);
  const auto nn = static_cast<std::ptrdiff_t>(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::ptrdiff_t k0 = ((static_cast<std::ptrdiff_t>(k) - base) % nn + nn) % nn;
    const std::ptrdiff_t k1 = ((k0 - 1) % nn + nn) % nn;
    row[k] = (1.0 - frac) * src[static_cast<std::size_t>(k0)] +
             frac * src[static_cast<std::size_t>(k1)];
  }
}

inline void apply_warp(VelocityCube& cube, const ShearWarp& warp) {
  if (warp.identity()) return;
  const double r0 = cube.radial.inner();
  const double span = cube.radial.outer() - r0;
  for (std::size_t i = 1; i < cube.n_r(); ++i) {
    const double t = (cube.radial[i] - r0) / span;
    for (std::size_t j = 0; j < cube.n_lat(); ++j) {
      const double shift = warp.amplitude * t * (std::sin(cube.grid.latitude(j)) + warp.bias);
      shift_row(cube.slice(i).subspan(j * cube.n_lon(), cube.n_lon()), shift,
                cube.grid.lon_step());
    }
  }
}

struct SynthConfig {
  std::size_t n_r = 20;
  std::size_t n_lat = 24;
  std::size_t n_lon = 48;
  double r_max = RadialGrid::kOuterRadius;
  std::size_t l_band = 6;
  hux::HuxParams hux;
  // Acceleration amplitude alpha(lat) = hux.alpha + alpha_polar * sin^2(lat).
  double alpha_polar = 0.0;
  ShearWarp warp;
};

/// Settings used for the desk-scale experiment: polar wind accelerates harder
/// than HUX assumes and a north-south shear displaces streams.
inline SynthConfig desk_synth_config() {
  SynthConfig c;
  c.alpha_polar = 0.3;
  c.warp.amplitude = 0.35;
  c.warp.bias = 0.25;
  return c;
}

struct SynthSample {
  std::uint64_t seed = 0;
  std::vector<double> boundary;
  VelocityCube truth;
};

inline std::uint64_t synth_sample_seed(std::uint64_t seed, std::size_t index) {
  return splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(index) + 1));
}

/// Truth cubes: HUX-f with latitude-dependent acceleration followed by the
/// shear warp. Slice 0 of each truth cube is the boundary.
inline std::vector<SynthSample> synth_dataset(std::uint64_t seed, std::size_t count,
                                              const SynthConfig& cfg) {
  if (count == 0) throw InvalidArgument("synth_dataset: count must be >= 1");
  const auto grid = make_grid(cfg.n_lat, cfg.n_lon);
  const auto radial = RadialGrid::uniform(cfg.n_r, RadialGrid::kInnerRadius, cfg.r_max);

  std::vector<double> alphas(grid.n_lat());
  for (std::size_t j = 0; j < grid.n_lat(); ++j) {
    const double s = std::sin(grid.latitude(j));
    alphas[j] = cfg.hux.alpha + cfg.alpha_polar * s * s;
  }
  if (cfg.hux.add_acceleration)
    for (double a : alphas)
      if (!(a >= 0.0 && a < 1.0)) throw InvalidArgument("synth_dataset: alpha(lat) outside [0, 1)");

  std::vector<SynthSample> out;
  out.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    SynthSample s;
    s.seed = synth_sample_seed(seed, n);
    s.boundary = synth_boundary(s.seed, grid, cfg.l_band);
    s.truth = hux::hux_f(s.boundary, radial, grid, cfg.hux, alphas);
    apply_warp(s.truth, cfg.warp);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace swsfno
