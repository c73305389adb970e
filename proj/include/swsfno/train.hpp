#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <filesystem>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "swsfno/core.hpp"
#include "swsfno/cube.hpp"
#include "swsfno/grid.hpp"
#include "swsfno/sfno.hpp"
#include "swsfno/sfno_params.hpp"
#include "swsfno/storage.hpp"

namespace swsfno {

// ---------------------------------------------------------------------------
// Adam

struct AdamOptions {
  double lr = 8e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<double> m, v;
  std::uint64_t t = 0;

  explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

/// Bias-corrected Adam update, in place.
inline void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
                      const AdamOptions& opt = {}) {
  if (params.size() != grads.size() || state.m.size() != params.size())
    throw ShapeError("adam_step: size mismatch");
  ++state.t;
  const double t = static_cast<double>(state.t);
  const double c1 = 1.0 - std::pow(opt.beta1, t);
  const double c2 = 1.0 - std::pow(opt.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = opt.beta1 * state.m[i] + (1.0 - opt.beta1) * g;
    state.v[i] = opt.beta2 * state.v[i] + (1.0 - opt.beta2) * g * g;
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    params[i] -= opt.lr * mhat / (std::sqrt(vhat) + opt.eps);
  }
}

// ---------------------------------------------------------------------------
// Checkpoints

struct CurvePoint {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  std::optional<double> val_loss;

  bool operator==(const CurvePoint&) const = default;
};

struct Checkpoint {
  static constexpr std::uint8_t kVersion = 1;

  SfnoParams params;
  NormStats norm;
  std::size_t n_lat = 0, n_lon = 0;  // training grid
  std::vector<double> radii;         // shells of the training cubes
  std::vector<CurvePoint> curve;
  std::size_t best_epoch = 0;        // 0 = initial parameters

  const SfnoConfig& config() const { return params.config; }
  SphericalGrid grid() const { return make_grid(n_lat, n_lon); }
  RadialGrid radial() const { return RadialGrid::from_radii(radii); }

  bool operator==(const Checkpoint& o) const {
    return params == o.params && norm.v_min == o.norm.v_min && norm.v_max == o.norm.v_max &&
           n_lat == o.n_lat && n_lon == o.n_lon && radii == o.radii && curve == o.curve &&
           best_epoch == o.best_epoch;
  }
};

inline constexpr char kCheckpointMagic[4] = {'S', 'F', 'C', '1'};

/// SFC1 layout (little-endian):
///   0..3 "SFC1", 4 version, 5..7 zero, 8..15 u64 JSON byte length,
///   JSON {config, norm, grid, radii, curve, best_epoch},
///   u64 parameter count, then f64 parameters in ParamLayout order.
inline std::vector<unsigned char> encode_checkpoint(const Checkpoint& ck) {
  nlohmann::json j;
  j["config"] = ck.params.config;
  j["norm"] = ck.norm;
  j["grid"] = {{"n_lat", ck.n_lat}, {"n_lon", ck.n_lon}};
  j["radii"] = ck.radii;
  j["best_epoch"] = ck.best_epoch;
  auto& curve = j["curve"] = nlohmann::json::array();
  for (const auto& c : ck.curve) {
    nlohmann::json row = {{"epoch", c.epoch}, {"train_loss", c.train_loss}};
    row["val_loss"] = c.val_loss ? nlohmann::json(*c.val_loss) : nlohmann::json(nullptr);
    curve.push_back(row);
  }
  const std::string text = j.dump();

  std::vector<unsigned char> out;
  out.insert(out.end(), kCheckpointMagic, kCheckpointMagic + 4);
  out.push_back(Checkpoint::kVersion);
  out.insert(out.end(), 3, 0);
  detail::put_u64(out, text.size());
  out.insert(out.end(), text.begin(), text.end());
  detail::put_u64(out, ck.params.values.size());
  for (double v : ck.params.values) detail::put_f64(out, v);
  return out;
}

inline Checkpoint decode_checkpoint(std::span<const unsigned char> bytes) {
  using K = FormatError::Kind;
  if (bytes.size() < 16) throw FormatError(K::Truncated, "checkpoint: header truncated");
  if (std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0)
    throw FormatError(K::BadMagic, "checkpoint: bad magic");
  if (bytes[4] != Checkpoint::kVersion)
    throw FormatError(K::VersionMismatch, "checkpoint: unsupported version");
  const std::uint64_t jlen = detail::get_u64(bytes.data() + 8);
  if (jlen > bytes.size() - 16) throw FormatError(K::Truncated, "checkpoint: JSON truncated");
  const std::size_t pos = 16 + static_cast<std::size_t>(jlen);
  if (bytes.size() < pos + 8) throw FormatError(K::Truncated, "checkpoint: parameter count missing");

  Checkpoint ck;
  try {
    const auto j = nlohmann::json::parse(bytes.begin() + 16, bytes.begin() + static_cast<std::ptrdiff_t>(pos));
    const auto cfg = j.at("config").get<SfnoConfig>();
    ck.params.config = cfg;
    ck.params.layout = ParamLayout::build(cfg);
    ck.norm = j.at("norm").get<NormStats>();
    ck.n_lat = j.at("grid").at("n_lat").get<std::size_t>();
    ck.n_lon = j.at("grid").at("n_lon").get<std::size_t>();
    ck.radii = j.at("radii").get<std::vector<double>>();
    ck.best_epoch = j.at("best_epoch").get<std::size_t>();
    for (const auto& row : j.at("curve")) {
      CurvePoint c;
      c.epoch = row.at("epoch").get<std::size_t>();
      c.train_loss = row.at("train_loss").get<double>();
      if (!row.at("val_loss").is_null()) c.val_loss = row.at("val_loss").get<double>();
      ck.curve.push_back(c);
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(K::Malformed, std::string("checkpoint: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(K::Malformed, std::string("checkpoint: ") + e.what());
  }

  const std::uint64_t count = detail::get_u64(bytes.data() + pos);
  if (count != ck.params.layout.total)
    throw FormatError(K::Malformed, "checkpoint: parameter count does not match config");
  if ((bytes.size() - pos - 8) / 8 < count)
    throw FormatError(K::Truncated, "checkpoint: parameters truncated");
  if (bytes.size() != pos + 8 + 8 * count) throw FormatError(K::Malformed, "checkpoint: trailing bytes");
  ck.params.values.resize(count);
  const unsigned char* p = bytes.data() + pos + 8;
  for (auto& v : ck.params.values) {
    v = detail::get_f64(p);
    p += 8;
  }
  return ck;
}

inline void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  detail::write_all(path, encode_checkpoint(ck));
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(detail::read_all(path));
}

// ---------------------------------------------------------------------------
// Training

struct TrainOptions {
  std::size_t epochs = 200;
  std::size_t batch_size = 32;
  AdamOptions adam;
  // Fraction of the training cubes (taken from the end) held out for
  // checkpoint selection. Unset means 10%.
  std::optional<double> val_fraction;
  // Called after each epoch; may be empty.
  std::function<void(const CurvePoint&)> on_epoch;
};

inline NormalizedSample make_sample(const VelocityCube& cube, const NormStats& norm) {
  if (cube.n_r() < 2) throw ShapeError("training cube needs at least two shells");
  NormalizedSample s;
  s.input = apply_norm(cube.slice(0), norm);
  s.target = apply_norm(std::span<const double>(cube.values).subspan(cube.slice_size()), norm);
  return s;
}

/// Mean loss over samples, evaluated one at a time.
inline double evaluate_loss(const Sfno& model, const SfnoParams& params,
                            std::span<const NormalizedSample> samples) {
  if (samples.empty()) return std::numeric_limits<double>::quiet_NaN();
  const BatchSpec one{1, model.config().out_channels, model.grid().n_lat(), model.grid().n_lon()};
  double total = 0.0;
  for (const auto& s : samples) total += loss_l2_2d(model.forward(params, s.input), s.target, one);
  return total / static_cast<double>(samples.size());
}

/// Trains from scratch on `train_cubes`, selecting the parameters with the
/// lowest loss on `val_cubes` (or on the training loss when there are none).
/// Shuffling is seeded from config.seed and the epoch index.
inline Checkpoint train(std::span<const VelocityCube> train_cubes,
                        std::span<const VelocityCube> val_cubes, SfnoConfig config,
                        const TrainOptions& opt) {
  if (train_cubes.empty()) throw InvalidArgument("train: empty training split");
  if (opt.batch_size == 0) throw InvalidArgument("train: batch size must be >= 1");
  const VelocityCube& first = train_cubes.front();
  for (const auto& c : train_cubes)
    if (!c.same_dims(first)) throw ShapeError("train: cubes differ in dimensions");
  for (const auto& c : val_cubes)
    if (!c.same_dims(first)) throw ShapeError("train: validation cube dimensions differ");
  config.out_channels = first.n_r() - 1;
  config.in_channels = 1;

  Checkpoint ck;
  ck.params = init_params(config);
  ck.norm = fit_norm(train_cubes);
  ck.n_lat = first.n_lat();
  ck.n_lon = first.n_lon();
  ck.radii = first.radial.radii();

  const Sfno model(config, first.grid);
  std::vector<NormalizedSample> train_set, val_set;
  for (const auto& c : train_cubes) train_set.push_back(make_sample(c, ck.norm));
  for (const auto& c : val_cubes) val_set.push_back(make_sample(c, ck.norm));

  SfnoParams params = ck.params;
  AdamState adam(params.size());
  std::vector<double> grad(params.size());
  std::vector<std::size_t> order(train_set.size());
  double best = std::numeric_limits<double>::infinity();

  for (std::size_t epoch = 1; epoch <= opt.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng rng(splitmix64(config.seed) ^ splitmix64(epoch));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

    double epoch_loss = 0.0;
    std::vector<const NormalizedSample*> batch;
    for (std::size_t start = 0; start < order.size(); start += opt.batch_size) {
      batch.clear();
      for (std::size_t i = start; i < std::min(order.size(), start + opt.batch_size); ++i)
        batch.push_back(&train_set[order[i]]);
      const double l = loss_and_gradient(model, params, batch, grad);
      epoch_loss += l * static_cast<double>(batch.size());
      adam_step(params.values, grad, adam, opt.adam);
    }
    CurvePoint point;
    point.epoch = epoch;
    point.train_loss = epoch_loss / static_cast<double>(train_set.size());
    if (!val_set.empty()) point.val_loss = evaluate_loss(model, params, val_set);
    const double score = point.val_loss ? *point.val_loss : point.train_loss;
    if (!std::isfinite(score)) throw DivergenceError("train: non-finite loss at epoch " + std::to_string(epoch));
    if (score < best) {
      best = score;
      ck.params.values = params.values;
      ck.best_epoch = epoch;
    }
    ck.curve.push_back(point);
    if (opt.on_epoch) opt.on_epoch(point);
  }
  return ck;
}

/// Splits the cubes into training and validation (last fraction) and trains.
inline Checkpoint train(std::span<const VelocityCube> cubes, const SfnoConfig& config,
                        const TrainOptions& opt) {
  if (cubes.empty()) throw InvalidArgument("train: empty training split");
  const double frac = opt.val_fraction.value_or(0.1);
  if (!(frac >= 0.0 && frac < 1.0)) throw InvalidArgument("train: val_fraction must be in [0, 1)");
  auto n_val = static_cast<std::size_t>(std::floor(frac * static_cast<double>(cubes.size())));
  if (n_val >= cubes.size()) n_val = cubes.size() - 1;
  const std::size_t n_train = cubes.size() - n_val;
  return train(cubes.subspan(0, n_train), cubes.subspan(n_train), config, opt);
}

inline std::vector<VelocityCube> load_split(const DatasetManifest& manifest, Split split) {
  std::vector<VelocityCube> cubes;
  for (const auto& e : manifest.split(split)) cubes.push_back(read_cube(manifest.resolve(e)));
  return cubes;
}

inline Checkpoint train(const DatasetManifest& manifest, const SfnoConfig& config,
                        const TrainOptions& opt) {
  const auto cubes = load_split(manifest, Split::Train);
  if (cubes.empty()) throw InvalidArgument("train: manifest has no training cubes");
  return train(std::span<const VelocityCube>(cubes), config, opt);
}

/// Mean squared error in (km/s)^2 over predicted shells 1..n_r-1.
inline double prediction_mse(const Sfno& model, const Checkpoint& ck,
                             std::span<const VelocityCube> cubes) {
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& c : cubes) {
    const auto pred = model.predict_cube(ck.params, c.slice(0), ck.norm, c.radial);
    for (std::size_t i = c.slice_size(); i < c.values.size(); ++i) {
      const double d = pred.values[i] - c.values[i];
      total += d * d;
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

struct CvRow {
  std::size_t n_layers = 0;
  std::size_t hidden = 0;
  std::vector<double> fold_mse;  // (km/s)^2

  double mean() const {
    return std::accumulate(fold_mse.begin(), fold_mse.end(), 0.0) /
           static_cast<double>(fold_mse.size());
  }
};

/// Contiguous-block k-fold cross-validation over architectures. Each fold is
/// trained from scratch on the remaining cubes for opt.epochs without an
/// inner validation split and scored by physical-unit MSE on the fold.
inline std::vector<CvRow> cross_validate(std::span<const VelocityCube> cubes,
                                         std::span<const std::size_t> layer_options,
                                         std::span<const std::size_t> channel_options,
                                         SfnoConfig base, std::size_t folds,
                                         const TrainOptions& opt) {
  if (folds < 2) throw InvalidArgument("cross_validate: folds must be >= 2");
  if (cubes.size() < folds)
    throw InvalidArgument("cross_validate: need at least " + std::to_string(folds) + " cubes");
  std::vector<std::size_t> bounds(folds + 1);
  for (std::size_t f = 0; f <= folds; ++f) bounds[f] = f * cubes.size() / folds;

  std::vector<CvRow> rows;
  for (std::size_t layers : layer_options)
    for (std::size_t hidden : channel_options) {
      CvRow row{layers, hidden, {}};
      SfnoConfig cfg = base;
      cfg.n_layers = layers;
      cfg.hidden = hidden;
      for (std::size_t f = 0; f < folds; ++f) {
        std::vector<VelocityCube> tr;
        for (std::size_t i = 0; i < cubes.size(); ++i)
          if (i < bounds[f] || i >= bounds[f + 1]) tr.push_back(cubes[i]);
        const auto held = cubes.subspan(bounds[f], bounds[f + 1] - bounds[f]);
        const auto ck = train(std::span<const VelocityCube>(tr), std::span<const VelocityCube>(),
                              cfg, opt);
        const Sfno model(ck.config(), held.front().grid);
        row.fold_mse.push_back(prediction_mse(model, ck, held));
      }
      rows.push_back(std::move(row));
    }
  return rows;
}

/// Inference on a grid refined by `factor` with unchanged parameters and
/// mode caps. `boundary` must already be sampled on the refined grid.
inline VelocityCube infer_multires(const Checkpoint& ck, std::span<const double> boundary,
                                   std::size_t factor) {
  const auto fine = refine(ck.grid(), factor);
  if (boundary.size() != fine.size())
    throw ShapeError("infer_multires: boundary does not match the refined grid (" +
                     std::to_string(fine.n_lat()) + " x " + std::to_string(fine.n_lon()) + ")");
  const Sfno model(ck.config(), fine);
  return model.predict_cube(ck.params, boundary, ck.norm, ck.radial());
}

}  // namespace swsfno
