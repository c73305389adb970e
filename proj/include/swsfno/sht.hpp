#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "swsfno/core.hpp"
#include "swsfno/fourier.hpp"
#include "swsfno/grid.hpp"

namespace swsfno {

using cplx = std::complex<double>;

/// Number of stored (l, m) pairs with 0 <= m <= min(l, m_max), l <= l_max.
inline std::size_t triangular_size(std::size_t l_max, std::size_t m_max) {
  std::size_t n = 0;
  for (std::size_t l = 0; l <= l_max; ++l) n += std::min(l, m_max) + 1;
  return n;
}

/// Spherical-harmonic coefficients of real fields, m >= 0 only, l-major
/// triangular layout, contiguous per channel.
struct SpectralCoeffs {
  std::size_t l_max = 0;
  std::size_t m_max = 0;
  std::size_t channels = 0;
  std::vector<cplx> data;

  SpectralCoeffs() = default;
  SpectralCoeffs(std::size_t l_max_, std::size_t m_max_, std::size_t channels_)
      : l_max(l_max_), m_max(m_max_), channels(channels_),
        data(channels_ * triangular_size(l_max_, m_max_)) {}

  std::size_t per_channel() const { return triangular_size(l_max, m_max); }

  // Offset of (l, 0) within one channel.
  std::size_t row_offset(std::size_t l) const {
    std::size_t off = 0;
    for (std::size_t k = 0; k < l; ++k) off += std::min(k, m_max) + 1;
    return off;
  }

  std::size_t index(std::size_t l, std::size_t m) const { return row_offset(l) + m; }

  cplx& at(std::size_t c, std::size_t l, std::size_t m) {
    return data[c * per_channel() + index(l, m)];
  }
  const cplx& at(std::size_t c, std::size_t l, std::size_t m) const {
    return data[c * per_channel() + index(l, m)];
  }

  std::span<cplx> channel(std::size_t c) {
    const std::size_t n = per_channel();
    return {data.data() + c * n, n};
  }
  std::span<const cplx> channel(std::size_t c) const {
    const std::size_t n = per_channel();
    return {data.data() + c * n, n};
  }

  bool same_shape(const SpectralCoeffs& o) const {
    return l_max == o.l_max && m_max == o.m_max && channels == o.channels;
  }
};

/// Orthonormal associated Legendre functions without the Condon-Shortley
/// phase, normalized so that Y_lm = Pbar_lm(cos theta) exp(i m phi) has unit
/// L2 norm on the sphere. Output is l-major triangular, m <= min(l, m_max).
inline void normalized_legendre(std::size_t l_max, std::size_t m_max, double x,
                                std::span<double> out) {
  const double s = std::sqrt(std::max(0.0, (1.0 - x) * (1.0 + x)));
  const std::size_t mm = std::min(l_max, m_max);
  std::vector<std::size_t> row(l_max + 1);
  std::size_t off = 0;
  for (std::size_t l = 0; l <= l_max; ++l) {
    row[l] = off;
    off += std::min(l, m_max) + 1;
  }
  double pmm = 1.0 / std::sqrt(4.0 * kPi);
  for (std::size_t m = 0; m <= mm; ++m) {
    const double dm = static_cast<double>(m);
    if (m > 0) pmm *= std::sqrt((2.0 * dm + 1.0) / (2.0 * dm)) * s;
    out[row[m] + m] = pmm;
    if (m + 1 > l_max) continue;
    double p_prev = pmm;
    double p_cur = std::sqrt(2.0 * dm + 3.0) * x * pmm;
    out[row[m + 1] + m] = p_cur;
    for (std::size_t l = m + 2; l <= l_max; ++l) {
      const double dl = static_cast<double>(l);
      const double a = std::sqrt((4.0 * dl * dl - 1.0) / (dl * dl - dm * dm));
      const double b = std::sqrt(((dl - 1.0) * (dl - 1.0) - dm * dm) /
                                 (4.0 * (dl - 1.0) * (dl - 1.0) - 1.0));
      const double p_next = a * (x * p_cur - b * p_prev);
      out[row[l] + m] = p_next;
      p_prev = p_cur;
      p_cur = p_next;
    }
  }
}

/// Precomputed spherical harmonic transform on a Gauss-Legendre grid.
///
/// Conventions (per channel):
///   forward   a_lm = sum_j w_j Pbar_lm(x_j) F_m(j),  F_m = (2 pi / n_lon) DFT_m(row j)
///   inverse   f(j,k) = sum_lm c_m Pbar_lm(x_j) Re(a_lm e^{i m phi_k})
/// with c_0 = 1, c_m = 2 for 0 < m < n_lon/2 and c_{n_lon/2} = 1 (the sampled
/// Nyquist mode is real). Imaginary parts of m = 0 and Nyquist coefficients
/// never reach the grid. The adjoints are exact transposes of these maps
/// under the real Euclidean inner product on the stored arrays.
///
/// Immutable after construction; all transforms are const and reentrant.
class ShtPlan {
 public:
  ShtPlan() = default;

  ShtPlan(const SphericalGrid& grid, std::size_t l_max, std::size_t m_max)
      : grid_(grid), l_max_(l_max), m_max_(m_max) {
    if (l_max + 1 > grid.n_lat())
      throw InvalidArgument("ShtPlan: l_max " + std::to_string(l_max) +
                            " exceeds n_lat - 1 = " + std::to_string(grid.n_lat() - 1));
    if (m_max > grid.n_lon() / 2)
      throw InvalidArgument("ShtPlan: m_max " + std::to_string(m_max) +
                            " exceeds n_lon / 2 = " + std::to_string(grid.n_lon() / 2));
    m_eff_ = std::min(l_max, m_max);
    ncoef_ = triangular_size(l_max, m_max);
    fourier_ = RowFourier(grid.n_lon(), m_eff_);

    coef_l_.resize(ncoef_);
    coef_m_.resize(ncoef_);
    for (std::size_t l = 0, idx = 0; l <= l_max; ++l)
      for (std::size_t m = 0; m <= std::min(l, m_max); ++m, ++idx) {
        coef_l_[idx] = l;
        coef_m_[idx] = m;
      }

    const std::size_t nl = grid.n_lat();
    legendre_.assign(ncoef_ * nl, 0.0);
    std::vector<double> buf(ncoef_);
    for (std::size_t j = 0; j < nl; ++j) {
      normalized_legendre(l_max, m_max, grid.cos_colatitudes()[j], buf);
      for (std::size_t idx = 0; idx < ncoef_; ++idx) legendre_[idx * nl + j] = buf[idx];
    }

    const double dphi = kTwoPi / static_cast<double>(grid.n_lon());
    quad_scale_.resize(nl);
    for (std::size_t j = 0; j < nl; ++j) quad_scale_[j] = grid.quad_weights()[j] * dphi;
    unit_rows_.assign(nl, 1.0);

    synth_weight_.resize(m_eff_ + 1);
    unit_m_.assign(m_eff_ + 1, 1.0);
    for (std::size_t m = 0; m <= m_eff_; ++m)
      synth_weight_[m] = (m == 0 || 2 * m == grid.n_lon()) ? 1.0 : 2.0;
  }

  const SphericalGrid& grid() const noexcept { return grid_; }
  std::size_t l_max() const noexcept { return l_max_; }
  std::size_t m_max() const noexcept { return m_max_; }
  std::size_t coeffs_per_channel() const noexcept { return ncoef_; }
  std::size_t degree_of(std::size_t idx) const { return coef_l_[idx]; }
  std::size_t order_of(std::size_t idx) const { return coef_m_[idx]; }
  // Synthesis multiplicity c_m.
  double multiplicity(std::size_t m) const { return synth_weight_[m]; }

  SpectralCoeffs forward(std::span<const double> field, std::size_t channels = 1) const {
    return analyze(field, channels, quad_scale_, unit_m_);
  }

  std::vector<double> inverse(const SpectralCoeffs& coeffs) const {
    return synthesize(coeffs, synth_weight_, unit_rows_);
  }

  /// Transpose of inverse(): field cotangent -> coefficient cotangent.
  SpectralCoeffs adjoint_inverse(std::span<const double> field_cot,
                                 std::size_t channels = 1) const {
    return analyze(field_cot, channels, unit_rows_, synth_weight_);
  }

  /// Transpose of forward(): coefficient cotangent -> field cotangent.
  std::vector<double> adjoint_forward(const SpectralCoeffs& coeff_cot) const {
    return synthesize(coeff_cot, unit_m_, quad_scale_);
  }

 private:
  void check_field(std::span<const double> field, std::size_t channels) const {
    if (field.size() != channels * grid_.size())
      throw ShapeError("ShtPlan: field has " + std::to_string(field.size()) +
                       " values, expected " + std::to_string(channels * grid_.size()));
  }

  void check_coeffs(const SpectralCoeffs& c) const {
    if (c.l_max != l_max_ || c.m_max != m_max_ || c.data.size() != c.channels * ncoef_)
      throw ShapeError("ShtPlan: coefficient shape mismatch");
  }

  SpectralCoeffs analyze(std::span<const double> field, std::size_t channels,
                         const std::vector<double>& row_scale,
                         const std::vector<double>& m_weight) const {
    check_field(field, channels);
    const std::size_t nl = grid_.n_lat(), nlon = grid_.n_lon(), M = m_eff_;
    SpectralCoeffs out(l_max_, m_max_, channels);
    std::vector<cplx> rowspec(M + 1);
    std::vector<cplx> fm((M + 1) * nl);  // [m][j]
    for (std::size_t c = 0; c < channels; ++c) {
      for (std::size_t j = 0; j < nl; ++j) {
        fourier_.analyze(field.subspan((c * nl + j) * nlon, nlon), rowspec);
        for (std::size_t m = 0; m <= M; ++m) fm[m * nl + j] = rowspec[m] * row_scale[j];
      }
      auto dst = out.channel(c);
      for (std::size_t idx = 0; idx < ncoef_; ++idx) {
        const std::size_t m = coef_m_[idx];
        const double* p = &legendre_[idx * nl];
        const cplx* f = &fm[m * nl];
        double re = 0.0, im = 0.0;
        for (std::size_t j = 0; j < nl; ++j) {
          re += p[j] * f[j].real();
          im += p[j] * f[j].imag();
        }
        dst[idx] = cplx(re, im) * m_weight[m];
      }
    }
    return out;
  }

  std::vector<double> synthesize(const SpectralCoeffs& coeffs,
                                 const std::vector<double>& m_weight,
                                 const std::vector<double>& row_scale) const {
    check_coeffs(coeffs);
    const std::size_t nl = grid_.n_lat(), nlon = grid_.n_lon(), M = m_eff_;
    std::vector<double> field(coeffs.channels * grid_.size());
    std::vector<cplx> gm((M + 1) * nl);  // [m][j]
    std::vector<cplx> rowspec(M + 1);
    for (std::size_t c = 0; c < coeffs.channels; ++c) {
      std::fill(gm.begin(), gm.end(), cplx(0.0, 0.0));
      auto src = coeffs.channel(c);
      for (std::size_t idx = 0; idx < ncoef_; ++idx) {
        const std::size_t m = coef_m_[idx];
        const double* p = &legendre_[idx * nl];
        cplx* g = &gm[m * nl];
        const double re = src[idx].real(), im = src[idx].imag();
        for (std::size_t j = 0; j < nl; ++j) g[j] += cplx(p[j] * re, p[j] * im);
      }
      for (std::size_t j = 0; j < nl; ++j) {
        for (std::size_t m = 0; m <= M; ++m) rowspec[m] = gm[m * nl + j];
        std::span<double> row(field.data() + (c * nl + j) * nlon, nlon);
        fourier_.synthesize(rowspec, m_weight, row);
        if (row_scale[j] != 1.0)
          for (double& v : row) v *= row_scale[j];
      }
    }
    return field;
  }

  SphericalGrid grid_;
  std::size_t l_max_ = 0, m_max_ = 0, m_eff_ = 0, ncoef_ = 0;
  RowFourier fourier_;
  std::vector<std::size_t> coef_l_, coef_m_;
  std::vector<double> legendre_;  // [idx][j]
  std::vector<double> quad_scale_, unit_rows_;
  std::vector<double> synth_weight_, unit_m_;
};

/// Spectral interpolation of a band-limited field between grids: analysis on
/// the source plan, synthesis on a plan for the target grid with the same caps.
inline std::vector<double> resample(std::span<const double> field, const ShtPlan& from,
                                    const SphericalGrid& to, std::size_t channels = 1) {
  const ShtPlan target(to, from.l_max(), from.m_max());
  auto coeffs = from.forward(field, channels);
  return target.inverse(coeffs);
}

/// Rotate a multi-channel field eastward by whole grid steps:
/// out(phi) = in(phi - k dphi).
inline std::vector<double> rotate_longitude(std::span<const double> field, std::size_t n_lon,
                                            std::ptrdiff_t steps) {
  std::vector<double> out(field.size());
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(n_lon);
  const std::size_t rows = field.size() / n_lon;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::ptrdiff_t k = 0; k < n; ++k) {
      const std::ptrdiff_t src = ((k - steps) % n + n) % n;
      out[r * n_lon + static_cast<std::size_t>(k)] =
          field[r * n_lon + static_cast<std::size_t>(src)];
    }
  return out;
}

}  // namespace swsfno
