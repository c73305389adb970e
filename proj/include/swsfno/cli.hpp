#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <iostream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "swsfno/hux.hpp"
#include "swsfno/metrics.hpp"
#include "swsfno/storage.hpp"
#include "swsfno/synth.hpp"
#include "swsfno/train.hpp"

// Subcommand implementations behind the sw_sfno tool. Each takes a resolved
// option struct; argument parsing lives in the tool itself.
namespace swsfno::cli {

namespace fs = std::filesystem;
using nlohmann::json;

/// One-line record of a resolved configuration, written to stderr and
/// optionally appended to a log file.
inline void echo_config(const std::string& command, const json& config,
                        const std::string& log_path) {
  json line = {{"command", command}, {"config", config}};
  const std::string text = line.dump();
  std::cerr << "[repro] " << text << '\n';
  if (!log_path.empty()) {
    std::ofstream out(log_path, std::ios::app);
    if (!out) throw FormatError(FormatError::Kind::Io, "cannot append to log " + log_path);
    out << text << '\n';
  }
}

inline void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError(FormatError::Kind::Io, "cannot write " + path.string());
  out << text;
  if (!out) throw FormatError(FormatError::Kind::Io, "short write to " + path.string());
}

inline std::string format_double(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
  std::uint64_t seed = 1;
  std::size_t count = 64;
  std::size_t test_count = 16;
  std::size_t n_r = 20;
  double r_max = RadialGrid::kOuterRadius;
  std::size_t n_lat = 24;
  std::size_t n_lon = 48;
  std::size_t l_band = 6;
  bool warp = true;
  std::string out = "synth";
};

inline json to_json(const SynthArgs& a) {
  return {{"seed", a.seed},   {"count", a.count}, {"test_count", a.test_count},
          {"nr", a.n_r},      {"rmax", a.r_max}, {"nlat", a.n_lat},  {"nlon", a.n_lon},
          {"lband", a.l_band}, {"warp", a.warp},   {"out", a.out}};
}

/// Cubes get synthetic Carrington numbers so the usual threshold splits
/// them: the first count - test_count fall at or below it, the rest above.
inline DatasetManifest cmd_synth(const SynthArgs& a) {
  if (a.test_count > a.count) throw InvalidArgument("synth: test-count exceeds count");
  SynthConfig cfg = a.warp ? desk_synth_config() : SynthConfig{};
  cfg.n_r = a.n_r;
  cfg.r_max = a.r_max;
  cfg.n_lat = a.n_lat;
  cfg.n_lon = a.n_lon;
  cfg.l_band = a.l_band;
  make_grid(a.n_lat, a.n_lon);  // validate before doing any work
  const auto samples = synth_dataset(a.seed, a.count, cfg);

  const fs::path dir(a.out);
  fs::create_directories(dir);
  const std::size_t n_train = a.count - a.test_count;
  std::vector<ManifestEntry> entries;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "cube_%04zu.hwc", i);
    const int cr = i < n_train ? kLastTrainingRotation - static_cast<int>(n_train - 1 - i)
                               : kLastTrainingRotation + 1 + static_cast<int>(i - n_train);
    write_cube(samples[i].truth, dir / name);
    std::ostringstream prov;
    prov << "synthetic seed " << a.seed << " index " << i << " sample seed " << samples[i].seed;
    write_sidecar(dir / name, {cr, Instrument::SYNTH, prov.str()});
    entries.push_back({name, cr, Instrument::SYNTH, split_for_rotation(cr)});
  }
  DatasetManifest manifest(std::move(entries), dir);
  manifest.save(dir / "manifest.json");
  return manifest;
}

// ---------------------------------------------------------------------------
// hux

struct HuxArgs {
  std::string in;
  std::string mode = "f";
  double alpha = 0.15;
  bool no_acceleration = false;
  std::size_t n_r = 140;     // used when the input holds a single shell
  double r_max = RadialGrid::kOuterRadius;
  std::string out = "hux.hwc";
};

inline json to_json(const HuxArgs& a) {
  return {{"in", a.in},   {"mode", a.mode}, {"alpha", a.alpha}, {"no_acceleration", a.no_acceleration},
          {"nr", a.n_r},  {"rmax", a.r_max}, {"out", a.out}};
}

/// Forward mode reads slice 0 of the input, backward mode its last slice.
/// A single-shell input is placed at r0 (forward) or r_max (backward) on a
/// uniform radial grid of n_r shells.
inline VelocityCube cmd_hux(const HuxArgs& a) {
  if (a.mode != "f" && a.mode != "b") throw InvalidArgument("hux: --mode must be f or b");
  const auto in = read_cube(a.in);
  RadialGrid radial = in.radial;
  if (in.n_r() == 1) {
    const double r = in.radial[0];
    radial = a.mode == "f" ? RadialGrid::uniform(a.n_r, r, a.r_max)
                           : RadialGrid::uniform(a.n_r, RadialGrid::kInnerRadius, r);
  }
  hux::HuxParams p;
  p.alpha = a.alpha;
  p.add_acceleration = !a.no_acceleration;
  hux::HuxDiagnostics diag;
  auto cube = a.mode == "f" ? hux::hux_f(in.slice(0), radial, in.grid, p, {}, &diag)
                            : hux::hux_b(in.slice(in.n_r() - 1), radial, in.grid, p, &diag);
  write_cube(cube, a.out);
  std::cerr << "hux: max CFL ratio " << diag.max_cfl << '\n';
  return cube;
}

// ---------------------------------------------------------------------------
// train / cv

struct ModelArgs {
  std::size_t layers = 4;
  std::size_t channels = 64;
  std::optional<std::size_t> l_max;  // default n_lat - 1
  std::optional<std::size_t> m_max;  // default n_lon / 2
  std::size_t mlp_ratio = 2;
  std::string activation = "gelu";
  std::string spectral = "real";
  bool no_embedding = false;
  std::uint64_t seed = 0;
};

inline json to_json(const ModelArgs& a) {
  return {{"layers", a.layers},
          {"channels", a.channels},
          {"lmax", a.l_max ? json(*a.l_max) : json("auto")},
          {"mmax", a.m_max ? json(*a.m_max) : json("auto")},
          {"mlp_ratio", a.mlp_ratio},
          {"activation", a.activation},
          {"spectral", a.spectral},
          {"no_embedding", a.no_embedding},
          {"seed", a.seed}};
}

inline SfnoConfig make_config(const ModelArgs& a, const VelocityCube& like) {
  const auto& grid = like.grid;
  SfnoConfig c;
  c.out_channels = like.n_r() - 1;
  c.n_layers = a.layers;
  c.hidden = a.channels;
  c.l_max = a.l_max.value_or(grid.n_lat() - 1);
  c.m_max = a.m_max.value_or(grid.n_lon() / 2);
  c.mlp_ratio = a.mlp_ratio;
  if (a.activation == "gelu")
    c.activation = Activation::GELU;
  else if (a.activation == "relu")
    c.activation = Activation::ReLU;
  else
    throw InvalidArgument("--activation must be gelu or relu");
  if (a.spectral == "real")
    c.spectral = SpectralWeights::RealPerDegree;
  else if (a.spectral == "complex")
    c.spectral = SpectralWeights::ComplexPerMode;
  else
    throw InvalidArgument("--spectral must be real or complex");
  c.use_position_embedding = !a.no_embedding;
  c.seed = a.seed;
  return c;
}

struct TrainArgs {
  std::string manifest;
  ModelArgs model;
  std::size_t epochs = 200;
  std::size_t batch = 32;
  double lr = 8e-4;
  std::optional<double> val_fraction;
  std::string out = "model.sfc";
  std::string curve;  // default: <out>.curve.csv
  bool quiet = false;
};

inline json to_json(const TrainArgs& a) {
  return {{"manifest", a.manifest}, {"model", to_json(a.model)}, {"epochs", a.epochs},
          {"batch", a.batch},       {"lr", a.lr},
          {"val_fraction", a.val_fraction ? json(*a.val_fraction) : json(nullptr)},
          {"out", a.out},           {"curve", a.curve}};
}

inline std::string curve_csv(const std::vector<CurvePoint>& curve) {
  std::string s = "epoch,train_loss,val_loss\n";
  for (const auto& c : curve)
    s += std::to_string(c.epoch) + "," + format_double(c.train_loss) + "," +
         (c.val_loss ? format_double(*c.val_loss) : std::string()) + "\n";
  return s;
}

inline Checkpoint cmd_train(const TrainArgs& a) {
  const auto manifest = DatasetManifest::load(a.manifest);
  const auto cubes = load_split(manifest, Split::Train);
  if (cubes.empty()) throw InvalidArgument("train: manifest has no training cubes");
  TrainOptions opt;
  opt.epochs = a.epochs;
  opt.batch_size = a.batch;
  opt.adam.lr = a.lr;
  opt.val_fraction = a.val_fraction;
  if (!a.quiet)
    opt.on_epoch = [](const CurvePoint& p) {
      std::cerr << "epoch " << p.epoch << " train " << p.train_loss;
      if (p.val_loss) std::cerr << " val " << *p.val_loss;
      std::cerr << '\n';
    };
  const auto ck = train(std::span<const VelocityCube>(cubes), make_config(a.model, cubes[0]), opt);
  save_checkpoint(ck, a.out);
  write_text(a.curve.empty() ? a.out + ".curve.csv" : a.curve, curve_csv(ck.curve));
  return ck;
}

struct CvArgs {
  std::string manifest;
  ModelArgs model;
  std::vector<std::size_t> layers = {4, 8};
  std::vector<std::size_t> channels = {64, 128, 256};
  std::size_t folds = 5;
  std::size_t epochs = 150;
  std::size_t batch = 32;
  double lr = 8e-4;
  std::string out = "cv.csv";
};

inline json to_json(const CvArgs& a) {
  return {{"manifest", a.manifest}, {"model", to_json(a.model)}, {"layers", a.layers},
          {"channels", a.channels}, {"folds", a.folds},          {"epochs", a.epochs},
          {"batch", a.batch},       {"lr", a.lr},                {"out", a.out}};
}

inline std::vector<CvRow> cmd_cv(const CvArgs& a) {
  const auto manifest = DatasetManifest::load(a.manifest);
  const auto cubes = load_split(manifest, Split::Train);
  if (cubes.empty()) throw InvalidArgument("cv: manifest has no training cubes");
  TrainOptions opt;
  opt.epochs = a.epochs;
  opt.batch_size = a.batch;
  opt.adam.lr = a.lr;
  const auto rows = cross_validate(cubes, a.layers, a.channels,
                                   make_config(a.model, cubes[0]), a.folds, opt);
  std::string csv = "layers,channels";
  for (std::size_t f = 0; f < a.folds; ++f) csv += ",fold" + std::to_string(f + 1);
  csv += ",mean\n";
  for (const auto& r : rows) {
    csv += std::to_string(r.n_layers) + "," + std::to_string(r.hidden);
    for (double m : r.fold_mse) csv += "," + format_double(m);
    csv += "," + format_double(r.mean()) + "\n";
  }
  write_text(a.out, csv);
  return rows;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string ckpt;
  std::string manifest;
  std::string split = "test";
  std::string report = "report.json";
  std::string per_radius_csv;  // default: <report stem>.per_radius.csv
  std::string histogram_csv;   // default: <report stem>.histogram.csv
  bool oracle = false;         // SFNO column replaced by the truth itself
  double edge_percentile = metrics::kDefaultEdgePercentile;
  std::size_t bins = 50;
  double hux_alpha = 0.15;
};

inline json to_json(const EvalArgs& a) {
  return {{"ckpt", a.ckpt},       {"manifest", a.manifest},
          {"split", a.split},     {"report", a.report},
          {"oracle", a.oracle},   {"edge_percentile", a.edge_percentile},
          {"bins", a.bins},       {"hux_alpha", a.hux_alpha}};
}

inline constexpr const char* kRelChangeConvention =
    "improvement-positive: (HUX-SFNO)/HUX*100 for lower-is-better metrics "
    "(mse, edge_mse, emd), (SFNO-HUX)/HUX*100 for higher-is-better metrics "
    "(ms_ssim, acc, psnr)";

inline json relative_change_row(const metrics::MetricReport& sfno,
                                const metrics::MetricReport& huxr) {
  using metrics::Direction;
  auto cell = [](std::optional<double> v) {
    return v && std::isfinite(*v) ? json(*v) : json(nullptr);
  };
  json row;
  row["mse"] = cell(metrics::relative_change(sfno.mse, huxr.mse, Direction::LowerIsBetter));
  row["edge_mse"] = sfno.edge_mse && huxr.edge_mse
                        ? cell(metrics::relative_change(*sfno.edge_mse, *huxr.edge_mse,
                                                        Direction::LowerIsBetter))
                        : json(nullptr);
  row["emd"] = cell(metrics::relative_change(sfno.emd, huxr.emd, Direction::LowerIsBetter));
  row["ms_ssim"] =
      cell(metrics::relative_change(sfno.ms_ssim, huxr.ms_ssim, Direction::HigherIsBetter));
  row["acc"] = cell(metrics::relative_change(sfno.acc, huxr.acc, Direction::HigherIsBetter));
  row["psnr"] = cell(metrics::relative_change(sfno.psnr, huxr.psnr, Direction::HigherIsBetter));
  return row;
}

/// Runs the SFNO (or the truth, with --oracle) and HUX-f on one split and
/// writes a two-model report plus per-radius and histogram CSVs.
inline json cmd_eval(const EvalArgs& a) {
  Split split;
  if (a.split == "test")
    split = Split::Test;
  else if (a.split == "train")
    split = Split::Train;
  else
    throw InvalidArgument("eval: --split must be train or test");
  if (!a.oracle && a.ckpt.empty()) throw InvalidArgument("eval: --ckpt is required");

  std::optional<Checkpoint> ck;
  if (!a.oracle) ck = load_checkpoint(a.ckpt);
  const auto manifest = DatasetManifest::load(a.manifest);
  const auto truths = load_split(manifest, split);
  if (truths.empty()) throw InvalidArgument("eval: split '" + a.split + "' is empty");
  const auto train_cubes = load_split(manifest, Split::Train);
  if (train_cubes.empty()) throw InvalidArgument("eval: climatology needs training cubes");
  const auto clim = metrics::build_climatology(train_cubes);

  std::vector<VelocityCube> sfno_pred, hux_pred;
  std::optional<Sfno> model;
  if (ck) model.emplace(ck->config(), truths[0].grid);
  hux::HuxParams hp;
  hp.alpha = a.hux_alpha;
  for (const auto& t : truths) {
    sfno_pred.push_back(ck ? model->predict_cube(ck->params, t.slice(0), ck->norm, t.radial) : t);
    hux_pred.push_back(hux::hux_f(t.slice(0), t.radial, t.grid, hp));
  }
  metrics::EvalOptions eo;
  eo.edge_percentile = a.edge_percentile;
  const auto rs = metrics::evaluate(sfno_pred, truths, clim, eo);
  const auto rh = metrics::evaluate(hux_pred, truths, clim, eo);

  json report;
  report["header"] = {{"table", "SFNO vs HUX-f"},
                      {"split", a.split},
                      {"n_cubes", truths.size()},
                      {"grid", {truths[0].n_r(), truths[0].n_lat(), truths[0].n_lon()}},
                      {"sfno_source", a.oracle ? "oracle (truth)" : a.ckpt},
                      {"aggregation", "mean over cubes; shells 1..n_r-1"},
                      {"data_range", metrics::truth_range(truths)},
                      {"edge_percentile", a.edge_percentile},
                      {"rel_change_convention", kRelChangeConvention}};
  report["models"] = {{"SFNO", metrics::to_json(rs)}, {"HUX-f", metrics::to_json(rh)}};
  report["rel_change_pct"] = relative_change_row(rs, rh);

  const fs::path rpath(a.report);
  write_text(rpath, report.dump(2) + "\n");
  auto sibling = [&](const std::string& suffix) {
    auto p = rpath;
    p.replace_extension(suffix);
    return p;
  };

  std::string pr = "radius_index,radius_rsun,sfno_mse,hux_mse\n";
  for (std::size_t i = 0; i < rs.per_radius_mse.size(); ++i)
    pr += std::to_string(i + 1) + "," + format_double(truths[0].radial[i + 1]) + "," +
          format_double(rs.per_radius_mse[i]) + "," + format_double(rh.per_radius_mse[i]) + "\n";
  write_text(a.per_radius_csv.empty() ? sibling(".per_radius.csv") : fs::path(a.per_radius_csv), pr);

  // Histograms share the truth's bin edges so the columns are comparable.
  std::vector<double> all_truth, all_sfno, all_hux;
  for (std::size_t c = 0; c < truths.size(); ++c) {
    auto add = [](std::vector<double>& dst, const VelocityCube& cube) {
      const auto s = metrics::shells(cube);
      dst.insert(dst.end(), s.begin(), s.end());
    };
    add(all_truth, truths[c]);
    add(all_sfno, sfno_pred[c]);
    add(all_hux, hux_pred[c]);
  }
  const auto ht = metrics::speed_histogram(all_truth, a.bins);
  auto bin_counts = [&](const std::vector<double>& v) {
    std::vector<std::size_t> counts(a.bins, 0);
    const double w = ht.hi - ht.lo;
    for (double x : v) {
      double pos = w > 0.0 ? (x - ht.lo) / w * static_cast<double>(a.bins) : 0.0;
      pos = std::clamp(pos, 0.0, static_cast<double>(a.bins - 1));
      ++counts[static_cast<std::size_t>(pos)];
    }
    return counts;
  };
  const auto cs = bin_counts(all_sfno), chx = bin_counts(all_hux);
  std::string hist = "bin_lo,bin_hi,truth,sfno,hux\n";
  for (std::size_t b = 0; b < a.bins; ++b) {
    const double lo = ht.lo + ht.bin_width() * static_cast<double>(b);
    hist += format_double(lo) + "," + format_double(lo + ht.bin_width()) + "," +
            std::to_string(ht.counts[b]) + "," + std::to_string(cs[b]) + "," +
            std::to_string(chx[b]) + "\n";
  }
  write_text(a.histogram_csv.empty() ? sibling(".histogram.csv") : fs::path(a.histogram_csv), hist);
  return report;
}

// ---------------------------------------------------------------------------
// bench

struct BenchArgs {
  std::string ckpt;
  std::string boundary;  // cube file; slice 0 is the boundary
  std::size_t repeat = 5;
  std::string out;       // optional JSON path
};

inline json to_json(const BenchArgs& a) {
  return {{"ckpt", a.ckpt}, {"boundary", a.boundary}, {"repeat", a.repeat}, {"out", a.out}};
}

struct MemSample {
  double rss_mb = 0.0;
  double hwm_mb = 0.0;
};

/// Resident and peak-resident set from /proc/self/status (Linux); zeros
/// elsewhere. Platform-approximate.
inline MemSample read_memory() {
  MemSample m;
  std::ifstream in("/proc/self/status");
  std::string key;
  while (in >> key) {
    double kb = 0.0;
    if (key == "VmRSS:" && in >> kb) m.rss_mb = kb / 1024.0;
    else if (key == "VmHWM:" && in >> kb) m.hwm_mb = kb / 1024.0;
    in.ignore(std::numeric_limits<std::streamsize>::max(), '\n');
  }
  return m;
}

// Resets the kernel's peak-RSS counter so each method gets its own peak.
inline void reset_peak_memory() {
  std::ofstream out("/proc/self/clear_refs");
  if (out) out << "5";
}

template <class F>
json bench_one(F&& run, std::size_t repeat) {
  std::vector<double> times, totals, infers;
  for (std::size_t r = 0; r < repeat; ++r) {
    reset_peak_memory();
    const auto before = read_memory();
    const auto t0 = std::chrono::steady_clock::now();
    run();
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const auto after = read_memory();
    times.push_back(dt);
    totals.push_back(after.hwm_mb);
    infers.push_back(std::max(0.0, after.hwm_mb - before.rss_mb));
  }
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  };
  return {{"time_s", median(times)}, {"total_mem_mb", median(totals)},
          {"infer_mem_mb", median(infers)}, {"repeats", repeat}};
}

inline json cmd_bench(const BenchArgs& a) {
  if (a.repeat == 0) throw InvalidArgument("bench: --repeat must be >= 1");
  const auto ck = load_checkpoint(a.ckpt);
  const auto cube = read_cube(a.boundary);
  const auto grid = cube.grid;
  const auto radial = ck.radial();
  std::vector<double> boundary(cube.slice(0).begin(), cube.slice(0).end());
  const Sfno model(ck.config(), grid);
  double sink = 0.0;
  json out;
  out["SFNO"] = bench_one(
      [&] { sink += model.predict_cube(ck.params, boundary, ck.norm, radial).values.back(); },
      a.repeat);
  out["HUX-f"] = bench_one(
      [&] { sink += hux::hux_f(boundary, radial, grid, hux::HuxParams{}).values.back(); },
      a.repeat);
  out["note"] = "median over repeats; memory from /proc/self/status, platform-approximate";
  if (!std::isfinite(sink)) throw DivergenceError("bench: non-finite output");
  if (!a.out.empty()) write_text(a.out, out.dump(2) + "\n");
  return out;
}

// ---------------------------------------------------------------------------
// render

struct RenderArgs {
  std::string cube;
  std::size_t radius_index = 0;
  std::string out = "slice.pgm";
  std::string format;  // pgm | ppm; default from the extension
};

inline json to_json(const RenderArgs& a) {
  return {{"cube", a.cube}, {"radius_index", a.radius_index}, {"out", a.out}, {"format", a.format}};
}

// Five-stop blue-to-yellow palette, linearly interpolated.
inline std::array<unsigned char, 3> palette(double t) {
  static constexpr double stops[5][3] = {
      {68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}};
  t = std::clamp(t, 0.0, 1.0) * 4.0;
  const auto i = std::min<std::size_t>(static_cast<std::size_t>(t), 3);
  const double f = t - static_cast<double>(i);
  std::array<unsigned char, 3> c{};
  for (int k = 0; k < 3; ++k)
    c[k] = static_cast<unsigned char>(std::lround(stops[i][k] + f * (stops[i + 1][k] - stops[i][k])));
  return c;
}

/// Equiangular image of one shell, north at the top, longitude 0 at the
/// left. Slice minimum and maximum map to the palette ends; a constant slice
/// renders as the low end.
inline std::vector<unsigned char> render_slice(const VelocityCube& cube, std::size_t radius_index,
                                               bool color) {
  if (radius_index >= cube.n_r())
    throw InvalidArgument("render: radius index " + std::to_string(radius_index) +
                          " out of range (n_r = " + std::to_string(cube.n_r()) + ")");
  const auto s = cube.slice(radius_index);
  const auto [mn, mx] = std::minmax_element(s.begin(), s.end());
  const double lo = *mn, span = *mx - *mn;
  const std::size_t H = cube.n_lat(), W = cube.n_lon();
  const std::string header =
      std::string(color ? "P6" : "P5") + "\n" + std::to_string(W) + " " + std::to_string(H) + "\n255\n";
  std::vector<unsigned char> img(header.begin(), header.end());
  for (std::size_t row = 0; row < H; ++row) {
    const std::size_t j = H - 1 - row;  // grid row 0 is the southernmost
    for (std::size_t k = 0; k < W; ++k) {
      const double t = span > 0.0 ? (s[j * W + k] - lo) / span : 0.0;
      if (color) {
        const auto c = palette(t);
        img.insert(img.end(), c.begin(), c.end());
      } else {
        img.push_back(static_cast<unsigned char>(std::lround(255.0 * t)));
      }
    }
  }
  return img;
}

inline void cmd_render(const RenderArgs& a) {
  std::string fmt = a.format;
  if (fmt.empty()) fmt = fs::path(a.out).extension() == ".ppm" ? "ppm" : "pgm";
  if (fmt != "pgm" && fmt != "ppm") throw InvalidArgument("render: --format must be pgm or ppm");
  const auto cube = read_cube(a.cube);
  const auto img = render_slice(cube, a.radius_index, fmt == "ppm");
  detail::write_all(a.out, img);
}

}  // namespace swsfno::cli
