#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "swsfno/sfno.hpp"

namespace swsfno::testing {

inline double rel_l2(std::span<const double> a, std::span<const double> b) {
  double e = 0.0, n = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    e += (a[i] - b[i]) * (a[i] - b[i]);
    n += b[i] * b[i];
  }
  return std::sqrt(e / n);
}

// Loss oracle written against 4-D indexing, no shared code with the library.
inline double brute_force_loss(const std::vector<double>& pred, const std::vector<double>& truth,
                               std::size_t B, std::size_t C, std::size_t H, std::size_t W) {
  auto at = [&](const std::vector<double>& t, std::size_t b, std::size_t c, std::size_t i,
                std::size_t j) { return t[((b * C + c) * H + i) * W + j]; };
  double outer = 0.0;
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t c = 0; c < C; ++c) {
      double inner = 0.0;
      for (std::size_t i = 0; i < H; ++i)
        for (std::size_t j = 0; j < W; ++j) {
          const double r = at(truth, b, c, i, j) - at(pred, b, c, i, j);
          inner += std::abs(r) * std::abs(r);
        }
      outer += std::pow(inner, 0.5);
    }
  return outer / static_cast<double>(B * C);
}

// The fixed tiny operator used by the gradient and golden tests.
inline SfnoConfig tiny_config(std::size_t out_channels = 3) {
  SfnoConfig c;
  c.n_layers = 2;
  c.hidden = 4;
  c.l_max = 7;
  c.m_max = 8;
  c.out_channels = out_channels;
  c.seed = 42;
  return c;
}

inline NormalizedSample random_sample(Rng& rng, std::size_t in_size, std::size_t out_size) {
  NormalizedSample s;
  for (std::size_t i = 0; i < in_size; ++i) s.input.push_back(rng.uniform());
  for (std::size_t i = 0; i < out_size; ++i) s.target.push_back(rng.uniform());
  return s;
}

struct GradCheck {
  double max_rel = 0.0;        // with the magnitude floor
  double max_raw_rel = 0.0;    // plain |fd - an| / max(|fd|, |an|)
  std::size_t checked = 0;
};

// Central differences on `count` random coordinates. Relative errors use
// max(|fd|, |an|, floor) in the denominator: at h = 1e-5 the difference
// quotient carries ~1e-10 of absolute round-off, so components far below the
// floor are judged in absolute terms.
inline GradCheck finite_difference_check(const Sfno& model, const SfnoParams& params,
                                         std::span<const NormalizedSample* const> batch,
                                         Rng& rng, std::size_t count, double h = 1e-5,
                                         double floor = 1e-4) {
  std::vector<double> grad(params.size()), scratch(params.size());
  loss_and_gradient(model, params, batch, grad);
  GradCheck out;
  SfnoParams p = params;
  for (std::size_t t = 0; t < count; ++t) {
    const std::size_t i = rng.below(params.size());
    const double x = p.values[i];
    p.values[i] = x + h;
    const double lp = loss_and_gradient(model, p, batch, scratch);
    p.values[i] = x - h;
    const double lm = loss_and_gradient(model, p, batch, scratch);
    p.values[i] = x;
    const double fd = (lp - lm) / (2.0 * h);
    const double diff = std::abs(fd - grad[i]);
    const double mag = std::max(std::abs(fd), std::abs(grad[i]));
    out.max_rel = std::max(out.max_rel, diff / std::max(mag, floor));
    out.max_raw_rel = std::max(out.max_raw_rel, mag > 0.0 ? diff / mag : 0.0);
    ++out.checked;
  }
  return out;
}

}  // namespace swsfno::testing
