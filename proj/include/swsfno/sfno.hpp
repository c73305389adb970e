#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "swsfno/core.hpp"
#include "swsfno/cube.hpp"
#include "swsfno/grid.hpp"
#include "swsfno/sfno_params.hpp"
#include "swsfno/sht.hpp"
#include "swsfno/storage.hpp"

namespace swsfno {

// ---------------------------------------------------------------------------
// Pointwise pieces

inline double activate(Activation a, double x) {
  if (a == Activation::Identity) return x;
  if (a == Activation::ReLU) return x > 0.0 ? x : 0.0;
  return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0)));
}

inline double activate_grad(Activation a, double x) {
  if (a == Activation::Identity) return 1.0;
  if (a == Activation::ReLU) return x > 0.0 ? 1.0 : 0.0;
  constexpr double kInvSqrt2Pi = 0.3989422804014327;
  return 0.5 * (1.0 + std::erf(x / std::sqrt(2.0))) + x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

namespace detail {

// out[o][p] = sum_i W[o][i] in[i][p] + b[o]
inline void linear_forward(const double* W, const double* b, std::size_t n_out, std::size_t n_in,
                           std::size_t P, const double* in, double* out) {
  for (std::size_t o = 0; o < n_out; ++o) {
    double* dst = out + o * P;
    std::fill(dst, dst + P, b[o]);
    const double* wrow = W + o * n_in;
    for (std::size_t i = 0; i < n_in; ++i) {
      const double w = wrow[i];
      const double* src = in + i * P;
      for (std::size_t p = 0; p < P; ++p) dst[p] += w * src[p];
    }
  }
}

// Accumulates dW, db; writes din when non-null.
inline void linear_backward(const double* W, std::size_t n_out, std::size_t n_in, std::size_t P,
                            const double* in, const double* dout, double* dW, double* db,
                            double* din) {
  for (std::size_t o = 0; o < n_out; ++o) {
    const double* g = dout + o * P;
    double sb = 0.0;
    for (std::size_t p = 0; p < P; ++p) sb += g[p];
    db[o] += sb;
    double* dwrow = dW + o * n_in;
    for (std::size_t i = 0; i < n_in; ++i) {
      const double* src = in + i * P;
      double s = 0.0;
      for (std::size_t p = 0; p < P; ++p) s += g[p] * src[p];
      dwrow[i] += s;
    }
  }
  if (!din) return;
  std::fill(din, din + n_in * P, 0.0);
  for (std::size_t o = 0; o < n_out; ++o) {
    const double* g = dout + o * P;
    const double* wrow = W + o * n_in;
    for (std::size_t i = 0; i < n_in; ++i) {
      const double w = wrow[i];
      double* dst = din + i * P;
      for (std::size_t p = 0; p < P; ++p) dst[p] += w * g[p];
    }
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Spectral convolution

/// out[c'](l, m) = sum_c w[c][c'][l] in[c](l, m)            (RealPerDegree)
/// out[c'](l, m) = sum_c w[c][c'][(l, m)] in[c](l, m)       (ComplexPerMode)
inline SpectralCoeffs spectral_conv(const SpectralCoeffs& in, std::span<const double> weights,
                                    SpectralWeights mode, std::size_t out_channels) {
  const std::size_t C = in.channels, n = in.per_channel(), L = in.l_max + 1;
  const std::size_t expect = mode == SpectralWeights::RealPerDegree ? C * out_channels * L
                                                                    : C * out_channels * n * 2;
  if (weights.size() != expect)
    throw ShapeError("spectral_conv: weights have " + std::to_string(weights.size()) +
                     " entries, expected " + std::to_string(expect));
  SpectralCoeffs out(in.l_max, in.m_max, out_channels);
  std::vector<std::size_t> row_start(L + 1);
  for (std::size_t l = 0; l <= L; ++l) row_start[l] = l < L ? in.row_offset(l) : n;

  for (std::size_t c = 0; c < C; ++c) {
    const cplx* src = in.data.data() + c * n;
    for (std::size_t co = 0; co < out_channels; ++co) {
      cplx* dst = out.data.data() + co * n;
      if (mode == SpectralWeights::RealPerDegree) {
        const double* w = weights.data() + (c * out_channels + co) * L;
        for (std::size_t l = 0; l < L; ++l)
          for (std::size_t i = row_start[l]; i < row_start[l + 1]; ++i) dst[i] += w[l] * src[i];
      } else {
        const double* w = weights.data() + (c * out_channels + co) * n * 2;
        for (std::size_t i = 0; i < n; ++i) dst[i] += cplx(w[2 * i], w[2 * i + 1]) * src[i];
      }
    }
  }
  return out;
}

/// Reverse pass of spectral_conv. Accumulates into dweights; returns the
/// input cotangent.
inline SpectralCoeffs spectral_conv_backward(const SpectralCoeffs& in,
                                             std::span<const double> weights,
                                             SpectralWeights mode, const SpectralCoeffs& dout,
                                             std::span<double> dweights) {
  const std::size_t C = in.channels, CO = dout.channels, n = in.per_channel(), L = in.l_max + 1;
  SpectralCoeffs din(in.l_max, in.m_max, C);
  std::vector<std::size_t> row_start(L + 1);
  for (std::size_t l = 0; l <= L; ++l) row_start[l] = l < L ? in.row_offset(l) : n;

  for (std::size_t c = 0; c < C; ++c) {
    const cplx* src = in.data.data() + c * n;
    cplx* dsrc = din.data.data() + c * n;
    for (std::size_t co = 0; co < CO; ++co) {
      const cplx* g = dout.data.data() + co * n;
      if (mode == SpectralWeights::RealPerDegree) {
        const double* w = weights.data() + (c * CO + co) * L;
        double* dw = dweights.data() + (c * CO + co) * L;
        for (std::size_t l = 0; l < L; ++l) {
          double s = 0.0;
          for (std::size_t i = row_start[l]; i < row_start[l + 1]; ++i) {
            s += g[i].real() * src[i].real() + g[i].imag() * src[i].imag();
            dsrc[i] += w[l] * g[i];
          }
          dw[l] += s;
        }
      } else {
        const double* w = weights.data() + (c * CO + co) * n * 2;
        double* dw = dweights.data() + (c * CO + co) * n * 2;
        for (std::size_t i = 0; i < n; ++i) {
          const cplx prod = std::conj(g[i]) * src[i];
          dw[2 * i] += prod.real();
          dw[2 * i + 1] -= prod.imag();
          dsrc[i] += std::conj(cplx(w[2 * i], w[2 * i + 1])) * g[i];
        }
      }
    }
  }
  return din;
}

// ---------------------------------------------------------------------------
// Loss

struct BatchSpec {
  std::size_t B = 1, C = 1, H = 1, W = 1;

  std::size_t size() const { return B * C * H * W; }
  void validate() const {
    if (B < 1 || C < 1 || H < 1 || W < 1) throw InvalidArgument("BatchSpec: all dims must be >= 1");
  }
};

/// Layer-wise 2-D L2 loss: (1 / (B C)) sum_{b,c} sqrt(sum_{i,j} |y - yhat|^2).
inline double loss_l2_2d(std::span<const double> pred, std::span<const double> truth,
                         const BatchSpec& spec) {
  spec.validate();
  if (pred.size() != spec.size() || truth.size() != spec.size())
    throw ShapeError("loss_l2_2d: tensor sizes do not match batch spec");
  const std::size_t plane = spec.H * spec.W;
  double total = 0.0;
  for (std::size_t bc = 0; bc < spec.B * spec.C; ++bc) {
    double s = 0.0;
    for (std::size_t p = 0; p < plane; ++p) {
      const double d = pred[bc * plane + p] - truth[bc * plane + p];
      s += d * d;
    }
    total += std::sqrt(s);
  }
  return total / static_cast<double>(spec.B * spec.C);
}

/// Gradient of loss_l2_2d with respect to pred (zero for exactly matching planes).
inline std::vector<double> loss_l2_2d_grad(std::span<const double> pred,
                                           std::span<const double> truth,
                                           const BatchSpec& spec) {
  spec.validate();
  if (pred.size() != spec.size() || truth.size() != spec.size())
    throw ShapeError("loss_l2_2d_grad: tensor sizes do not match batch spec");
  const std::size_t plane = spec.H * spec.W;
  const double inv = 1.0 / static_cast<double>(spec.B * spec.C);
  std::vector<double> g(pred.size(), 0.0);
  for (std::size_t bc = 0; bc < spec.B * spec.C; ++bc) {
    double s = 0.0;
    for (std::size_t p = 0; p < plane; ++p) {
      const double d = pred[bc * plane + p] - truth[bc * plane + p];
      s += d * d;
    }
    const double norm = std::sqrt(s);
    if (norm == 0.0) continue;
    for (std::size_t p = 0; p < plane; ++p)
      g[bc * plane + p] = inv * (pred[bc * plane + p] - truth[bc * plane + p]) / norm;
  }
  return g;
}

// ---------------------------------------------------------------------------
// The operator

/// Intermediate values kept for the reverse pass of one sample.
struct SfnoTape {
  std::vector<double> input;  // [in+embed][P]
  std::vector<double> enc_pre, enc_act;
  struct Block {
    std::vector<double> h_in;  // [H][P]
    SpectralCoeffs coeffs_in;
    std::vector<double> z;        // inverse SHT of convolved coeffs
    std::vector<double> mlp_pre, mlp_act;
    std::vector<double> out_pre;  // second MLP layer output before activation
  };
  std::vector<Block> blocks;
  std::vector<double> h_out;
  std::vector<double> dec_pre, dec_act;
};

/// Spherical Fourier neural operator bound to one grid. The parameters are
/// grid-independent; binding to a different grid rebuilds the transforms and
/// the position embedding only.
///
/// Per sample (fields are [channels][n_lat * n_lon]):
///   x  = [normalized boundary, embedding]
///   h0 = W2 act(W1 x + b1) + b2
///   h_{k+1} = s_k h_k + act(MLP_k(SHT^-1(K_k SHT(h_k))))
///   y  = Wd2 act(Wd1 h_L + bd1) + bd2
class Sfno {
 public:
  Sfno(SfnoConfig cfg, const SphericalGrid& grid)
      : cfg_(std::move(cfg)), grid_(grid), plan_(grid, cfg_.l_max, cfg_.m_max) {
    cfg_.validate();
    const std::size_t P = grid.size();
    embedding_.assign(cfg_.embed_channels() * P, 0.0);
    if (cfg_.use_position_embedding) {
      for (std::size_t j = 0; j < grid.n_lat(); ++j) {
        const double lat = grid.latitude(j);
        for (std::size_t k = 0; k < grid.n_lon(); ++k) {
          embedding_[j * grid.n_lon() + k] = std::sin(lat);
          embedding_[P + j * grid.n_lon() + k] = std::cos(2.0 * lat);
        }
      }
    }
  }

  const SfnoConfig& config() const noexcept { return cfg_; }
  const SphericalGrid& grid() const noexcept { return grid_; }
  const ShtPlan& plan() const noexcept { return plan_; }
  const std::vector<double>& embedding() const noexcept { return embedding_; }

  /// Normalized input [in_channels][P] -> normalized output [out_channels][P].
  std::vector<double> forward(const SfnoParams& params, std::span<const double> input,
                              SfnoTape* tape = nullptr) const {
    check_params(params);
    const std::size_t P = grid_.size(), H = cfg_.hidden, R = cfg_.mlp_hidden();
    if (input.size() != cfg_.in_channels * P)
      throw ShapeError("Sfno::forward: input has " + std::to_string(input.size()) +
                       " values, expected " + std::to_string(cfg_.in_channels * P));
    const auto& L = params.layout;
    const Activation act = cfg_.activation;

    std::vector<double> x(cfg_.encoder_inputs() * P);
    std::copy(input.begin(), input.end(), x.begin());
    std::copy(embedding_.begin(), embedding_.end(), x.begin() + input.size());

    std::vector<double> enc_pre(H * P), enc_act(H * P), h(H * P);
    linear(params, L.enc1, x.data(), enc_pre.data(), P);
    apply(act, enc_pre, enc_act);
    linear(params, L.enc2, enc_act.data(), h.data(), P);
    if (tape) {
      tape->input = x;
      tape->enc_pre = enc_pre;
      tape->enc_act = enc_act;
      tape->blocks.assign(cfg_.n_layers, {});
    }

    std::vector<double> mlp_pre(R * P), mlp_act(R * P), out_pre(H * P);
    for (std::size_t k = 0; k < cfg_.n_layers; ++k) {
      const auto& blk = L.blocks[k];
      auto coeffs = plan_.forward(h, H);
      auto conv = spectral_conv(coeffs, spectral_weights(params, k), cfg_.spectral, H);
      auto z = plan_.inverse(conv);
      linear(params, blk.mlp1, z.data(), mlp_pre.data(), P);
      apply(act, mlp_pre, mlp_act);
      linear(params, blk.mlp2, mlp_act.data(), out_pre.data(), P);
      const double s = params.values[blk.skip];
      if (tape) {
        auto& tb = tape->blocks[k];
        tb.h_in = h;
        tb.coeffs_in = std::move(coeffs);
        tb.z = std::move(z);
        tb.mlp_pre = mlp_pre;
        tb.mlp_act = mlp_act;
        tb.out_pre = out_pre;
      }
      for (std::size_t i = 0; i < H * P; ++i) h[i] = s * h[i] + activate(act, out_pre[i]);
    }

    std::vector<double> dec_pre(R * P), dec_act(R * P), y(cfg_.out_channels * P);
    linear(params, L.dec1, h.data(), dec_pre.data(), P);
    apply(act, dec_pre, dec_act);
    linear(params, L.dec2, dec_act.data(), y.data(), P);
    if (tape) {
      tape->h_out = std::move(h);
      tape->dec_pre = std::move(dec_pre);
      tape->dec_act = std::move(dec_act);
    }
    return y;
  }

  /// Reverse pass: accumulates d(loss)/d(params) into grad given the output
  /// cotangent dy.
  void backward(const SfnoParams& params, const SfnoTape& tape, std::span<const double> dy,
                std::span<double> grad) const {
    check_params(params);
    const std::size_t P = grid_.size(), H = cfg_.hidden, R = cfg_.mlp_hidden();
    if (dy.size() != cfg_.out_channels * P) throw ShapeError("Sfno::backward: bad cotangent size");
    if (grad.size() != params.size()) throw ShapeError("Sfno::backward: bad gradient size");
    const auto& L = params.layout;
    const Activation act = cfg_.activation;

    std::vector<double> d_act(R * P), d_pre(R * P), dh(H * P);
    linear_back(params, L.dec2, tape.dec_act.data(), dy.data(), grad, d_act.data(), P);
    for (std::size_t i = 0; i < R * P; ++i) d_pre[i] = d_act[i] * activate_grad(act, tape.dec_pre[i]);
    linear_back(params, L.dec1, tape.h_out.data(), d_pre.data(), grad, dh.data(), P);

    std::vector<double> d_out(H * P), dz(H * P), dh_prev(H * P);
    for (std::size_t k = cfg_.n_layers; k-- > 0;) {
      const auto& blk = L.blocks[k];
      const auto& tb = tape.blocks[k];
      const double s = params.values[blk.skip];
      double ds = 0.0;
      for (std::size_t i = 0; i < H * P; ++i) {
        ds += dh[i] * tb.h_in[i];
        dh_prev[i] = s * dh[i];
        d_out[i] = dh[i] * activate_grad(act, tb.out_pre[i]);
      }
      grad[blk.skip] += ds;
      linear_back(params, blk.mlp2, tb.mlp_act.data(), d_out.data(), grad, d_act.data(), P);
      for (std::size_t i = 0; i < R * P; ++i) d_pre[i] = d_act[i] * activate_grad(act, tb.mlp_pre[i]);
      linear_back(params, blk.mlp1, tb.z.data(), d_pre.data(), grad, dz.data(), P);

      auto d_conv = plan_.adjoint_inverse(dz, H);
      std::span<double> dw(grad.data() + blk.spectral, params.layout.spectral_size);
      auto d_coeffs = spectral_conv_backward(tb.coeffs_in, spectral_weights(params, k),
                                             cfg_.spectral, d_conv, dw);
      auto dh_spec = plan_.adjoint_forward(d_coeffs);
      for (std::size_t i = 0; i < H * P; ++i) dh[i] = dh_prev[i] + dh_spec[i];
    }

    std::vector<double> d_enc(H * P);
    linear_back(params, L.enc2, tape.enc_act.data(), dh.data(), grad, d_enc.data(), P);
    for (std::size_t i = 0; i < H * P; ++i) d_enc[i] *= activate_grad(act, tape.enc_pre[i]);
    linear_back(params, L.enc1, tape.input.data(), d_enc.data(), grad, nullptr, P);
  }

  /// Physical boundary (km/s) -> full cube: slice 0 is the boundary, slices
  /// 1..out_channels are denormalized predictions.
  VelocityCube predict_cube(const SfnoParams& params, std::span<const double> boundary,
                            const NormStats& norm, const RadialGrid& radial) const {
    if (radial.size() != cfg_.out_channels + 1)
      throw ShapeError("Sfno::predict_cube: radial grid must have out_channels + 1 shells");
    const auto x = apply_norm(boundary, norm);
    const auto y = forward(params, x);
    VelocityCube cube(radial, grid_);
    std::copy(boundary.begin(), boundary.end(), cube.slice(0).begin());
    for (std::size_t i = 0; i < y.size(); ++i) cube.values[grid_.size() + i] = norm.invert(y[i]);
    return cube;
  }

  std::span<const double> spectral_weights(const SfnoParams& params, std::size_t block) const {
    return {params.values.data() + params.layout.blocks[block].spectral,
            params.layout.spectral_size};
  }

 private:
  void check_params(const SfnoParams& params) const {
    if (!(params.config == cfg_) || params.values.size() != params.layout.total)
      throw ShapeError("Sfno: parameters were built for a different configuration");
  }

  static void apply(Activation a, const std::vector<double>& in, std::vector<double>& out) {
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = activate(a, in[i]);
  }

  static void linear(const SfnoParams& p, const ParamLayout::Linear& lin, const double* in,
                     double* out, std::size_t P) {
    detail::linear_forward(p.data(lin.w), p.data(lin.b), lin.n_out, lin.n_in, P, in, out);
  }

  static void linear_back(const SfnoParams& p, const ParamLayout::Linear& lin, const double* in,
                          const double* dout, std::span<double> grad, double* din, std::size_t P) {
    detail::linear_backward(p.data(lin.w), lin.n_out, lin.n_in, P, in, dout,
                            grad.data() + lin.w, grad.data() + lin.b, din);
  }

  SfnoConfig cfg_;
  SphericalGrid grid_;
  ShtPlan plan_;
  std::vector<double> embedding_;
};

/// One training pair in normalized space.
struct NormalizedSample {
  std::vector<double> input;   // [in_channels][P]
  std::vector<double> target;  // [out_channels][P]
};

/// Mean Eq.-style L2 loss over a batch and its exact gradient.
/// Items are processed in index order; gradients are summed in that order.
inline double loss_and_gradient(const Sfno& model, const SfnoParams& params,
                                std::span<const NormalizedSample* const> batch,
                                std::span<double> grad, double loss_scale = 1.0) {
  if (batch.empty()) throw InvalidArgument("loss_and_gradient: empty batch");
  std::fill(grad.begin(), grad.end(), 0.0);
  const BatchSpec spec{batch.size(), model.config().out_channels, model.grid().n_lat(),
                       model.grid().n_lon()};
  const BatchSpec one{1, spec.C, spec.H, spec.W};
  double total = 0.0;
  SfnoTape tape;
  for (const NormalizedSample* s : batch) {
    auto y = model.forward(params, s->input, &tape);
    // Per-item loss and gradient carry the 1/B of the batch mean.
    const double l = loss_l2_2d(y, s->target, one) / static_cast<double>(spec.B);
    if (!std::isfinite(l)) throw DivergenceError("training diverged: non-finite loss");
    total += l;
    auto dy = loss_l2_2d_grad(y, s->target, one);
    const double scale = loss_scale / static_cast<double>(spec.B);
    for (double& g : dy) g *= scale;
    model.backward(params, tape, dy, grad);
  }
  for (double g : grad)
    if (!std::isfinite(g)) throw DivergenceError("training diverged: non-finite gradient");
  return total * loss_scale;
}

}  // namespace swsfno
