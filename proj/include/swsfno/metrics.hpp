#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "swsfno/core.hpp"
#include "swsfno/cube.hpp"

// Evaluation metrics for predicted velocity cubes.
namespace swsfno::metrics {

inline void check_same_size(std::span<const double> a, std::span<const double> b,
                            const char* what) {
  if (a.size() != b.size())
    throw ShapeError(std::string(what) + ": sizes differ (" + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()) + ")");
  if (a.empty()) throw InvalidArgument(std::string(what) + ": empty input");
}

inline double mse(std::span<const double> pred, std::span<const double> truth) {
  check_same_size(pred, truth, "mse");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - truth[i];
    s += d * d;
  }
  return s / static_cast<double>(pred.size());
}

/// Shells first..n_r-1 of a cube as one span.
inline std::span<const double> shells(const VelocityCube& c, std::size_t first = 1) {
  return std::span<const double>(c.values).subspan(first * c.slice_size());
}

inline std::vector<double> per_radius_mse(const VelocityCube& pred, const VelocityCube& truth,
                                          std::size_t first = 1) {
  if (!pred.same_dims(truth)) throw ShapeError("per_radius_mse: cube dimensions differ");
  std::vector<double> out;
  for (std::size_t i = first; i < truth.n_r(); ++i) out.push_back(mse(pred.slice(i), truth.slice(i)));
  return out;
}

// ---------------------------------------------------------------------------
// Sobel edges

/// Gradient magnitude with the 3x3 Sobel kernels; longitude wraps, latitude
/// replicates its edge rows.
inline std::vector<double> sobel_magnitude(std::span<const double> slice, std::size_t n_lat,
                                           std::size_t n_lon) {
  if (n_lat < 3 || n_lon < 3) throw InvalidArgument("sobel: slice must be at least 3 x 3");
  if (slice.size() != n_lat * n_lon) throw ShapeError("sobel: slice size does not match dims");
  std::vector<double> mag(slice.size());
  auto at = [&](std::ptrdiff_t j, std::ptrdiff_t k) {
    j = std::clamp<std::ptrdiff_t>(j, 0, static_cast<std::ptrdiff_t>(n_lat) - 1);
    const auto n = static_cast<std::ptrdiff_t>(n_lon);
    k = ((k % n) + n) % n;
    return slice[static_cast<std::size_t>(j) * n_lon + static_cast<std::size_t>(k)];
  };
  for (std::size_t jj = 0; jj < n_lat; ++jj)
    for (std::size_t kk = 0; kk < n_lon; ++kk) {
      const auto j = static_cast<std::ptrdiff_t>(jj), k = static_cast<std::ptrdiff_t>(kk);
      const double gx = (at(j - 1, k + 1) + 2.0 * at(j, k + 1) + at(j + 1, k + 1)) -
                        (at(j - 1, k - 1) + 2.0 * at(j, k - 1) + at(j + 1, k - 1));
      const double gy = (at(j + 1, k - 1) + 2.0 * at(j + 1, k) + at(j + 1, k + 1)) -
                        (at(j - 1, k - 1) + 2.0 * at(j - 1, k) + at(j - 1, k + 1));
      mag[jj * n_lon + kk] = std::sqrt(gx * gx + gy * gy);
    }
  return mag;
}

/// Linear-interpolated percentile (0..100) of unsorted values.
inline double percentile(std::vector<double> v, double p) {
  if (v.empty()) throw InvalidArgument("percentile: empty input");
  std::sort(v.begin(), v.end());
  const double pos = std::clamp(p, 0.0, 100.0) / 100.0 * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline constexpr double kDefaultEdgePercentile = 90.0;

struct EdgeMask {
  std::vector<std::uint8_t> mask;
  double threshold_percentile = kDefaultEdgePercentile;
  double threshold = 0.0;
  std::size_t count = 0;

  bool empty() const { return count == 0; }
};

/// Cells whose Sobel magnitude is strictly above the given percentile of the
/// slice. A negative percentile selects every cell.
inline EdgeMask sobel_mask(std::span<const double> truth_slice, std::size_t n_lat,
                           std::size_t n_lon, double pct = kDefaultEdgePercentile) {
  const auto mag = sobel_magnitude(truth_slice, n_lat, n_lon);
  EdgeMask m;
  m.threshold_percentile = pct;
  m.threshold = pct < 0.0 ? -std::numeric_limits<double>::infinity() : percentile(mag, pct);
  m.mask.resize(mag.size());
  for (std::size_t i = 0; i < mag.size(); ++i) {
    m.mask[i] = mag[i] > m.threshold ? 1 : 0;
    m.count += m.mask[i];
  }
  return m;
}

/// MSE over the union of per-shell Sobel masks of the truth (shells first..).
/// Empty when every mask is empty.
inline std::optional<double> edge_mse(const VelocityCube& pred, const VelocityCube& truth,
                                      double pct = kDefaultEdgePercentile, std::size_t first = 1) {
  if (!pred.same_dims(truth)) throw ShapeError("edge_mse: cube dimensions differ");
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t i = first; i < truth.n_r(); ++i) {
    const auto m = sobel_mask(truth.slice(i), truth.n_lat(), truth.n_lon(), pct);
    const auto p = pred.slice(i), t = truth.slice(i);
    for (std::size_t c = 0; c < m.mask.size(); ++c)
      if (m.mask[c]) {
        const double d = p[c] - t[c];
        s += d * d;
        ++n;
      }
  }
  if (n == 0) return std::nullopt;
  return s / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// Earth mover's distance

/// 1-D Wasserstein-1 between equal-size samples: mean |sorted(a) - sorted(b)|.
inline double emd(std::span<const double> a, std::span<const double> b) {
  check_same_size(a, b, "emd");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += std::abs(x[i] - y[i]);
  return s / static_cast<double>(x.size());
}

// ---------------------------------------------------------------------------
// SSIM / MS-SSIM

inline constexpr std::array<double, 5> kMsSsimWeights = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
inline constexpr std::size_t kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;

struct Image {
  std::size_t rows = 0, cols = 0;
  std::vector<double> px;

  double at(std::size_t r, std::size_t c) const { return px[r * cols + c]; }
};

struct SsimTerms {
  double luminance = 1.0;
  double contrast_structure = 1.0;
};

inline std::vector<double> gaussian_window(std::size_t size, double sigma) {
  std::vector<double> w(size);
  const double c = (static_cast<double>(size) - 1.0) / 2.0;
  double s = 0.0;
  for (std::size_t i = 0; i < size; ++i) {
    const double x = static_cast<double>(i) - c;
    w[i] = std::exp(-x * x / (2.0 * sigma * sigma));
    s += w[i];
  }
  for (double& v : w) v /= s;
  return w;
}

// Separable "valid" Gaussian filtering.
inline Image filter_valid(const Image& in, const std::vector<double>& w) {
  const std::size_t n = w.size();
  Image tmp{in.rows, in.cols - n + 1, {}};
  tmp.px.assign(tmp.rows * tmp.cols, 0.0);
  for (std::size_t r = 0; r < tmp.rows; ++r)
    for (std::size_t c = 0; c < tmp.cols; ++c) {
      double s = 0.0;
      for (std::size_t q = 0; q < n; ++q) s += w[q] * in.at(r, c + q);
      tmp.px[r * tmp.cols + c] = s;
    }
  Image out{in.rows - n + 1, tmp.cols, {}};
  out.px.assign(out.rows * out.cols, 0.0);
  for (std::size_t r = 0; r < out.rows; ++r)
    for (std::size_t c = 0; c < out.cols; ++c) {
      double s = 0.0;
      for (std::size_t q = 0; q < n; ++q) s += w[q] * tmp.at(r + q, c);
      out.px[r * out.cols + c] = s;
    }
  return out;
}

/// Mean luminance and contrast-structure terms of single-scale SSIM.
inline SsimTerms ssim_terms(const Image& x, const Image& y, double data_range,
                            std::size_t window = kSsimWindow) {
  const double C1 = (0.01 * data_range) * (0.01 * data_range);
  const double C2 = (0.03 * data_range) * (0.03 * data_range);
  const auto w = gaussian_window(window, kSsimSigma);
  Image xx = x, yy = y, xy = x;
  for (std::size_t i = 0; i < x.px.size(); ++i) {
    xx.px[i] = x.px[i] * x.px[i];
    yy.px[i] = y.px[i] * y.px[i];
    xy.px[i] = x.px[i] * y.px[i];
  }
  const auto mx = filter_valid(x, w), my = filter_valid(y, w);
  const auto sxx = filter_valid(xx, w), syy = filter_valid(yy, w), sxy = filter_valid(xy, w);
  double l = 0.0, cs = 0.0;
  for (std::size_t i = 0; i < mx.px.size(); ++i) {
    const double mux = mx.px[i], muy = my.px[i];
    const double vx = sxx.px[i] - mux * mux, vy = syy.px[i] - muy * muy;
    const double cov = sxy.px[i] - mux * muy;
    l += (2.0 * mux * muy + C1) / (mux * mux + muy * muy + C1);
    cs += (2.0 * cov + C2) / (vx + vy + C2);
  }
  const double n = static_cast<double>(mx.px.size());
  return {l / n, cs / n};
}

inline Image downsample2(const Image& in) {
  Image out{in.rows / 2, in.cols / 2, {}};
  out.px.resize(out.rows * out.cols);
  for (std::size_t r = 0; r < out.rows; ++r)
    for (std::size_t c = 0; c < out.cols; ++c)
      out.px[r * out.cols + c] = 0.25 * (in.at(2 * r, 2 * c) + in.at(2 * r, 2 * c + 1) +
                                         in.at(2 * r + 1, 2 * c) + in.at(2 * r + 1, 2 * c + 1));
  return out;
}

struct MsSsimPlan {
  std::size_t scales = 5;
  std::size_t window = kSsimWindow;
  std::vector<double> weights;
  bool reduced = false;  // fewer than 5 scales or a shrunken window
};

/// Number of dyadic scales that keep the coarsest image at least as large
/// as the window; weights are renormalized over the scales kept.
inline MsSsimPlan plan_ms_ssim(std::size_t rows, std::size_t cols) {
  MsSsimPlan p;
  const std::size_t side = std::min(rows, cols);
  if (side == 0) throw InvalidArgument("ms_ssim: empty image");
  while (p.scales > 1 && (side >> (p.scales - 1)) < kSsimWindow) --p.scales;
  if (side < kSsimWindow) p.window = side % 2 == 1 ? side : side - 1;
  if (p.window == 0) p.window = 1;
  p.reduced = p.scales < 5 || p.window < kSsimWindow;
  double s = 0.0;
  for (std::size_t i = 0; i < p.scales; ++i) s += kMsSsimWeights[i];
  for (std::size_t i = 0; i < p.scales; ++i) p.weights.push_back(kMsSsimWeights[i] / s);
  return p;
}

/// Multi-scale SSIM of two images. Negative contrast-structure terms are
/// clamped to zero before exponentiation.
inline double ms_ssim_image(const Image& x, const Image& y, double data_range,
                            MsSsimPlan* plan_out = nullptr) {
  if (!(data_range > 0.0)) throw InvalidArgument("ms_ssim: data_range must be > 0");
  if (x.rows != y.rows || x.cols != y.cols) throw ShapeError("ms_ssim: image sizes differ");
  const auto plan = plan_ms_ssim(x.rows, x.cols);
  if (plan_out) *plan_out = plan;
  Image a = x, b = y;
  double value = 1.0;
  for (std::size_t s = 0; s < plan.scales; ++s) {
    const auto t = ssim_terms(a, b, data_range, plan.window);
    const double cs = std::max(t.contrast_structure, 0.0);
    if (s + 1 < plan.scales) {
      value *= std::pow(cs, plan.weights[s]);
      a = downsample2(a);
      b = downsample2(b);
    } else {
      value *= std::pow(std::max(t.luminance, 0.0) * cs, plan.weights[s]);
    }
  }
  return value;
}

struct MsSsimResult {
  double value = 1.0;
  std::size_t scales = 5;
  bool reduced = false;
};

/// MS-SSIM per shell (first..n_r-1), averaged over shells.
inline MsSsimResult ms_ssim(const VelocityCube& pred, const VelocityCube& truth, double data_range,
                            std::size_t first = 1) {
  if (!pred.same_dims(truth)) throw ShapeError("ms_ssim: cube dimensions differ");
  if (!(data_range > 0.0)) throw InvalidArgument("ms_ssim: data_range must be > 0");
  MsSsimResult r;
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t i = first; i < truth.n_r(); ++i) {
    Image a{truth.n_lat(), truth.n_lon(), {pred.slice(i).begin(), pred.slice(i).end()}};
    Image b{truth.n_lat(), truth.n_lon(), {truth.slice(i).begin(), truth.slice(i).end()}};
    MsSsimPlan plan;
    s += ms_ssim_image(a, b, data_range, &plan);
    r.scales = plan.scales;
    r.reduced = plan.reduced;
    ++n;
  }
  r.value = s / static_cast<double>(n);
  return r;
}

// ---------------------------------------------------------------------------
// PSNR, ACC, climatology, histogram

/// 10 log10(peak^2 / mse); +infinity when mse is zero.
inline double psnr(double mse_value, double peak) {
  if (!(peak > 0.0)) throw InvalidArgument("psnr: peak must be > 0");
  if (mse_value == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse_value);
}

/// Pearson correlation of (pred - clim) and (truth - clim).
inline double acc(std::span<const double> pred, std::span<const double> truth,
                  std::span<const double> clim) {
  check_same_size(pred, truth, "acc");
  check_same_size(pred, clim, "acc");
  const std::size_t n = pred.size();
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += pred[i] - clim[i];
    mb += truth[i] - clim[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = pred[i] - clim[i] - ma;
    const double b = truth[i] - clim[i] - mb;
    sab += a * b;
    saa += a * a;
    sbb += b * b;
  }
  if (saa == 0.0 || sbb == 0.0) throw UndefinedMetricError("acc: anomaly has zero variance");
  return sab / std::sqrt(saa * sbb);
}

/// Elementwise mean cube.
inline VelocityCube build_climatology(std::span<const VelocityCube> train) {
  if (train.empty()) throw InvalidArgument("build_climatology: no cubes");
  VelocityCube out = train.front();
  for (std::size_t c = 1; c < train.size(); ++c) {
    if (!train[c].same_dims(out)) throw ShapeError("build_climatology: cube dimensions differ");
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] += train[c].values[i];
  }
  if (train.size() > 1)
    for (double& v : out.values) v /= static_cast<double>(train.size());
  return out;
}

struct Histogram {
  double lo = 0.0, hi = 0.0;
  std::vector<std::size_t> counts;

  double bin_width() const { return (hi - lo) / static_cast<double>(counts.size()); }
};

/// Uniform bins over [min, max]; the maximum lands in the last bin. A
/// constant input puts everything in the first bin.
inline Histogram speed_histogram(std::span<const double> values, std::size_t bins) {
  if (bins == 0) throw InvalidArgument("speed_histogram: bins must be >= 1");
  if (values.empty()) throw InvalidArgument("speed_histogram: empty input");
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  Histogram h{*mn, *mx, std::vector<std::size_t>(bins, 0)};
  if (!std::isfinite(h.lo) || !std::isfinite(h.hi))
    throw DegenerateDataError("speed_histogram: non-finite range");
  const double width = h.hi - h.lo;
  for (double v : values) {
    std::size_t b = 0;
    if (width > 0.0) {
      b = static_cast<std::size_t>((v - h.lo) / width * static_cast<double>(bins));
      b = std::min(b, bins - 1);
    }
    ++h.counts[b];
  }
  return h;
}

// ---------------------------------------------------------------------------
// Aggregate report

struct MetricReport {
  double mse = 0.0;
  std::optional<double> edge_mse;
  double emd = 0.0;
  double ms_ssim = 1.0;
  double acc = 1.0;
  double psnr = 0.0;
  std::vector<double> per_radius_mse;
  std::vector<std::string> flags;
};

struct EvalOptions {
  double edge_percentile = kDefaultEdgePercentile;
  std::size_t first_shell = 1;
};

/// Data range of the truth over the evaluation set (shells first..).
inline double truth_range(std::span<const VelocityCube> truths, std::size_t first = 1) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& t : truths)
    for (double v : shells(t, first)) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  return hi - lo;
}

/// Per-cube metrics averaged over cubes. PSNR and MS-SSIM use the truth data
/// range over the whole set; edge MSE averages over cubes with a nonempty mask.
inline MetricReport evaluate(std::span<const VelocityCube> preds,
                             std::span<const VelocityCube> truths, const VelocityCube& climatology,
                             const EvalOptions& opt = {}) {
  if (preds.size() != truths.size() || preds.empty())
    throw ShapeError("evaluate: need equal, nonzero numbers of predictions and truths");
  const std::size_t first = opt.first_shell;
  const double range = truth_range(truths, first);
  MetricReport r;
  const double n = static_cast<double>(preds.size());
  double edge_sum = 0.0;
  std::size_t edge_n = 0;
  bool ssim_reduced = false, acc_undefined = false;
  std::size_t ssim_scales = 5;
  std::vector<double> radius_sum;
  for (std::size_t c = 0; c < preds.size(); ++c) {
    const auto& p = preds[c];
    const auto& t = truths[c];
    if (!p.same_dims(t) || !t.same_dims(climatology))
      throw ShapeError("evaluate: cube dimensions differ");
    const double m = mse(shells(p, first), shells(t, first));
    r.mse += m / n;
    if (auto e = edge_mse(p, t, opt.edge_percentile, first)) {
      edge_sum += *e;
      ++edge_n;
    }
    r.emd += emd(shells(p, first), shells(t, first)) / n;
    if (range > 0.0) {
      const auto ms = ms_ssim(p, t, range, first);
      r.ms_ssim += (ms.value - 1.0) / n;
      ssim_reduced = ssim_reduced || ms.reduced;
      ssim_scales = ms.scales;
      r.psnr += psnr(m, range) / n;
    }
    try {
      r.acc += (acc(shells(p, first), shells(t, first), shells(climatology, first)) - 1.0) / n;
    } catch (const UndefinedMetricError&) {
      acc_undefined = true;
    }
    const auto prof = per_radius_mse(p, t, first);
    if (radius_sum.empty()) radius_sum.assign(prof.size(), 0.0);
    for (std::size_t i = 0; i < prof.size(); ++i) radius_sum[i] += prof[i] / n;
  }
  r.per_radius_mse = std::move(radius_sum);
  if (edge_n > 0)
    r.edge_mse = edge_sum / static_cast<double>(edge_n);
  else
    r.flags.push_back("edge_mask_empty");
  if (ssim_reduced) r.flags.push_back("ms_ssim_scales_reduced:" + std::to_string(ssim_scales));
  if (!(range > 0.0)) {
    r.flags.push_back("truth_range_zero");
    r.psnr = std::numeric_limits<double>::quiet_NaN();
    r.ms_ssim = std::numeric_limits<double>::quiet_NaN();
  }
  if (acc_undefined) {
    r.flags.push_back("acc_undefined");
    r.acc = std::numeric_limits<double>::quiet_NaN();
  }
  return r;
}

/// Non-finite numbers become "+inf" / "-inf" / null.
inline nlohmann::json number_or_sentinel(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? "+inf" : "-inf";
  return v;
}

inline nlohmann::json to_json(const MetricReport& r) {
  nlohmann::json j;
  j["mse"] = number_or_sentinel(r.mse);
  j["edge_mse"] = r.edge_mse ? number_or_sentinel(*r.edge_mse) : nlohmann::json(nullptr);
  j["emd"] = number_or_sentinel(r.emd);
  j["ms_ssim"] = number_or_sentinel(r.ms_ssim);
  j["acc"] = number_or_sentinel(r.acc);
  j["psnr"] = number_or_sentinel(r.psnr);
  j["per_radius_mse"] = r.per_radius_mse;
  j["flags"] = r.flags;
  return j;
}

enum class Direction { LowerIsBetter, HigherIsBetter };

/// Improvement of `model` over `baseline` in percent, positive when better:
/// (baseline - model) / baseline for lower-is-better metrics and
/// (model - baseline) / baseline otherwise.
inline std::optional<double> relative_change(double model, double baseline, Direction d) {
  if (baseline == 0.0 || std::isnan(model) || std::isnan(baseline)) return std::nullopt;
  const double diff = d == Direction::LowerIsBetter ? baseline - model : model - baseline;
  return diff / std::abs(baseline) * 100.0;
}

}  // namespace swsfno::metrics
