#pragma once

#include <cmath>
#include <algorithm>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "swsfno/core.hpp"

namespace swsfno {

/// Real-row Fourier transforms truncated to wavenumbers 0..m_max.
///
/// Radix-2 FFT for power-of-two lengths, direct DFT otherwise. Both paths use
/// the unnormalized kernels
///   analyze:    X_m = sum_k f_k exp(-i m phi_k)
///   synthesize: f_k = sum_m c_m Re(X_m exp(+i m phi_k))
/// where c_m are caller-supplied per-wavenumber weights.
class RowFourier {
 public:
  using cplx = std::complex<double>;

  RowFourier() = default;

  RowFourier(std::size_t n, std::size_t m_max) : n_(n), m_max_(m_max) {
    if (n == 0) throw InvalidArgument("RowFourier: empty row");
    if (m_max > n / 2) throw InvalidArgument("RowFourier: m_max exceeds n/2");
    pow2_ = (n & (n - 1)) == 0;
    cos_.resize((m_max + 1) * n);
    sin_.resize((m_max + 1) * n);
    for (std::size_t m = 0; m <= m_max; ++m) {
      for (std::size_t k = 0; k < n; ++k) {
        // Reduce the angle index modulo n for accuracy.
        const std::size_t idx = (m * k) % n;
        const double a = kTwoPi * static_cast<double>(idx) / static_cast<double>(n);
        double c = std::cos(a), s = std::sin(a);
        if (idx == 0) {
          c = 1.0;
          s = 0.0;
        } else if (2 * idx == n) {
          c = -1.0;
          s = 0.0;
        }
        cos_[m * n + k] = c;
        sin_[m * n + k] = s;
      }
    }
    if (pow2_) {
      twiddle_.resize(n / 2);
      for (std::size_t k = 0; k < n / 2; ++k) {
        const double a = -kTwoPi * static_cast<double>(k) / static_cast<double>(n);
        twiddle_[k] = cplx(std::cos(a), std::sin(a));
      }
    }
  }

  std::size_t size() const noexcept { return n_; }
  std::size_t m_max() const noexcept { return m_max_; }
  bool uses_fft() const noexcept { return pow2_; }

  void analyze(std::span<const double> row, std::span<cplx> out) const {
    if (pow2_) {
      std::vector<cplx> work(n_);
      for (std::size_t k = 0; k < n_; ++k) work[k] = cplx(row[k], 0.0);
      fft_inplace(work, false);
      for (std::size_t m = 0; m <= m_max_; ++m) out[m] = work[m];
      return;
    }
    for (std::size_t m = 0; m <= m_max_; ++m) {
      const double* c = &cos_[m * n_];
      const double* s = &sin_[m * n_];
      double re = 0.0, im = 0.0;
      for (std::size_t k = 0; k < n_; ++k) {
        re += row[k] * c[k];
        im -= row[k] * s[k];
      }
      out[m] = cplx(re, im);
    }
  }

  void synthesize(std::span<const cplx> in, std::span<const double> weight,
                  std::span<double> row) const {
    if (pow2_) {
      std::vector<cplx> work(n_, cplx(0.0, 0.0));
      // Hermitian spectrum whose inverse DFT realizes sum c_m Re(X_m e^{im phi}).
      for (std::size_t m = 0; m <= m_max_; ++m) {
        const cplx x = in[m] * weight[m];
        if (m == 0 || 2 * m == n_) {
          work[m] += cplx(x.real(), 0.0);
        } else {
          work[m] += 0.5 * x;
          work[n_ - m] += 0.5 * std::conj(x);
        }
      }
      fft_inplace(work, true);
      for (std::size_t k = 0; k < n_; ++k) row[k] = work[k].real();
      return;
    }
    std::fill(row.begin(), row.end(), 0.0);
    for (std::size_t m = 0; m <= m_max_; ++m) {
      const double re = in[m].real() * weight[m];
      const double im = in[m].imag() * weight[m];
      const double* c = &cos_[m * n_];
      const double* s = &sin_[m * n_];
      for (std::size_t k = 0; k < n_; ++k) row[k] += re * c[k] - im * s[k];
    }
  }

 private:
  // Iterative radix-2; inverse = conjugate kernel, no 1/n scaling.
  void fft_inplace(std::vector<cplx>& a, bool inverse) const {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
      std::size_t bit = n >> 1;
      for (; j & bit; bit >>= 1) j ^= bit;
      j ^= bit;
      if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
      const std::size_t stride = n / len;
      for (std::size_t i = 0; i < n; i += len) {
        for (std::size_t k = 0; k < len / 2; ++k) {
          cplx w = twiddle_[k * stride];
          if (inverse) w = std::conj(w);
          const cplx u = a[i + k];
          const cplx v = a[i + k + len / 2] * w;
          a[i + k] = u + v;
          a[i + k + len / 2] = u - v;
        }
      }
    }
  }

  std::size_t n_ = 0;
  std::size_t m_max_ = 0;
  bool pow2_ = false;
  std::vector<double> cos_, sin_;
  std::vector<cplx> twiddle_;
};

}  // namespace swsfno
