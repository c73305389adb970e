#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "swsfno/core.hpp"
#include "swsfno/cube.hpp"
#include "swsfno/grid.hpp"

namespace swsfno {

// ---------------------------------------------------------------------------
// Little-endian primitives

namespace detail {

inline void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<unsigned char>(v >> (8 * b)));
}

inline void put_u64(std::vector<unsigned char>& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<unsigned char>(v >> (8 * b)));
}

inline void put_f64(std::vector<unsigned char>& out, double v) {
  put_u64(out, std::bit_cast<std::uint64_t>(v));
}

inline std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(p[b]) << (8 * b);
  return v;
}

inline std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(p[b]) << (8 * b);
  return v;
}

inline double get_f64(const unsigned char* p) { return std::bit_cast<double>(get_u64(p)); }

inline std::vector<unsigned char> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(FormatError::Kind::Io, "cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return bytes;
}

inline void write_all(const std::filesystem::path& path, std::span<const unsigned char> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(FormatError::Kind::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError(FormatError::Kind::Io, "short write to " + path.string());
}

}  // namespace detail

// ---------------------------------------------------------------------------
// HWC1 cube files
//
//   0..3   magic "HWC1"
//   4      version (1)
//   5..7   reserved, zero
//   8..19  u32 n_r, n_lat, n_lon
//   then   n_r f64 radii (solar radii)
//   then   n_r * n_lat * n_lon f64 velocities (km/s), radius-major
// All little-endian.

inline constexpr char kCubeMagic[4] = {'H', 'W', 'C', '1'};
inline constexpr std::uint8_t kCubeVersion = 1;
inline constexpr std::size_t kCubeHeaderBytes = 20;

inline std::vector<unsigned char> encode_cube(const VelocityCube& cube) {
  if (cube.values.size() != cube.n_r() * cube.slice_size())
    throw ShapeError("encode_cube: payload does not match dimensions");
  std::vector<unsigned char> out;
  out.reserve(kCubeHeaderBytes + 8 * (cube.n_r() + cube.values.size()));
  out.insert(out.end(), kCubeMagic, kCubeMagic + 4);
  out.push_back(kCubeVersion);
  out.push_back(0);
  out.push_back(0);
  out.push_back(0);
  detail::put_u32(out, static_cast<std::uint32_t>(cube.n_r()));
  detail::put_u32(out, static_cast<std::uint32_t>(cube.n_lat()));
  detail::put_u32(out, static_cast<std::uint32_t>(cube.n_lon()));
  for (double r : cube.radial.radii()) detail::put_f64(out, r);
  for (double v : cube.values) detail::put_f64(out, v);
  return out;
}

inline VelocityCube decode_cube(std::span<const unsigned char> bytes) {
  using K = FormatError::Kind;
  if (bytes.size() < kCubeHeaderBytes)
    throw FormatError(K::Truncated, "cube: header truncated");
  if (std::memcmp(bytes.data(), kCubeMagic, 4) != 0)
    throw FormatError(K::BadMagic, "cube: bad magic");
  if (bytes[4] != kCubeVersion)
    throw FormatError(K::VersionMismatch,
                      "cube: unsupported version " + std::to_string(bytes[4]));
  const std::uint64_t n_r = detail::get_u32(bytes.data() + 8);
  const std::uint64_t n_lat = detail::get_u32(bytes.data() + 12);
  const std::uint64_t n_lon = detail::get_u32(bytes.data() + 16);
  if (n_r == 0 || n_lat == 0 || n_lon == 0)
    throw FormatError(K::Malformed, "cube: zero dimension");

  // Cells must fit alongside the radii in an addressable buffer.
  constexpr std::uint64_t kMaxCells = std::numeric_limits<std::uint64_t>::max() / 16;
  if (n_lat > kMaxCells / n_lon || n_r > kMaxCells / (n_lat * n_lon))
    throw FormatError(K::DimensionOverflow, "cube: dimensions overflow");
  const std::uint64_t cells = n_r * n_lat * n_lon;
  const std::uint64_t need = kCubeHeaderBytes + 8 * (n_r + cells);
  if (bytes.size() < need)
    throw FormatError(K::Truncated, "cube: payload truncated (" + std::to_string(bytes.size()) +
                                        " of " + std::to_string(need) + " bytes)");
  if (bytes.size() > need) throw FormatError(K::Malformed, "cube: trailing bytes");

  std::vector<double> radii(n_r);
  const unsigned char* p = bytes.data() + kCubeHeaderBytes;
  for (auto& r : radii) {
    r = detail::get_f64(p);
    p += 8;
  }
  std::vector<double> values(cells);
  for (auto& v : values) {
    v = detail::get_f64(p);
    p += 8;
  }

  SphericalGrid grid;
  RadialGrid radial;
  try {
    grid = make_grid(n_lat, n_lon);
    radial = RadialGrid::from_radii(std::move(radii));
  } catch (const std::invalid_argument& e) {
    throw FormatError(K::Malformed, std::string("cube: ") + e.what());
  }
  return VelocityCube(std::move(radial), std::move(grid), std::move(values));
}

inline void write_cube(const VelocityCube& cube, const std::filesystem::path& path) {
  const auto bytes = encode_cube(cube);
  detail::write_all(path, bytes);
}

inline VelocityCube read_cube(const std::filesystem::path& path) {
  const auto bytes = detail::read_all(path);
  return decode_cube(bytes);
}

// ---------------------------------------------------------------------------
// Sidecar metadata and manifests

enum class Instrument { KPO, MDI, HMI, SYNTH };
enum class Split { Train, Test };

NLOHMANN_JSON_SERIALIZE_ENUM(Instrument, {{Instrument::KPO, "KPO"},
                                          {Instrument::MDI, "MDI"},
                                          {Instrument::HMI, "HMI"},
                                          {Instrument::SYNTH, "SYNTH"}})
NLOHMANN_JSON_SERIALIZE_ENUM(Split, {{Split::Train, "train"}, {Split::Test, "test"}})

inline constexpr int kLastTrainingRotation = 2169;

inline Split split_for_rotation(int carrington_rotation) {
  return carrington_rotation <= kLastTrainingRotation ? Split::Train : Split::Test;
}

struct CubeMetadata {
  int carrington_rotation = 0;
  Instrument instrument = Instrument::SYNTH;
  std::string provenance;
};

inline void to_json(nlohmann::json& j, const CubeMetadata& m) {
  j = {{"carrington_rotation", m.carrington_rotation},
       {"instrument", m.instrument},
       {"provenance", m.provenance}};
}

inline void from_json(const nlohmann::json& j, CubeMetadata& m) {
  j.at("carrington_rotation").get_to(m.carrington_rotation);
  j.at("instrument").get_to(m.instrument);
  m.provenance = j.value("provenance", "");
}

inline std::filesystem::path sidecar_path(const std::filesystem::path& cube_path) {
  auto p = cube_path;
  p.replace_extension(".json");
  return p;
}

inline void write_sidecar(const std::filesystem::path& cube_path, const CubeMetadata& meta) {
  std::ofstream out(sidecar_path(cube_path));
  if (!out) throw FormatError(FormatError::Kind::Io, "cannot write sidecar for " + cube_path.string());
  out << nlohmann::json(meta).dump(2) << '\n';
}

inline CubeMetadata read_sidecar(const std::filesystem::path& cube_path) {
  std::ifstream in(sidecar_path(cube_path));
  if (!in) throw FormatError(FormatError::Kind::Io, "missing sidecar for " + cube_path.string());
  try {
    return nlohmann::json::parse(in).get<CubeMetadata>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(FormatError::Kind::Malformed, std::string("sidecar: ") + e.what());
  }
}

struct ManifestEntry {
  std::string cube_path;  // relative paths resolve against the manifest directory
  int carrington_rotation = 0;
  Instrument instrument = Instrument::SYNTH;
  Split split = Split::Train;
};

inline void to_json(nlohmann::json& j, const ManifestEntry& e) {
  j = {{"cube_path", e.cube_path},
       {"carrington_rotation", e.carrington_rotation},
       {"instrument", e.instrument},
       {"split", e.split}};
}

inline void from_json(const nlohmann::json& j, ManifestEntry& e) {
  j.at("cube_path").get_to(e.cube_path);
  j.at("carrington_rotation").get_to(e.carrington_rotation);
  j.at("instrument").get_to(e.instrument);
  j.at("split").get_to(e.split);
}

class DatasetManifest {
 public:
  DatasetManifest() = default;
  explicit DatasetManifest(std::vector<ManifestEntry> entries,
                           std::filesystem::path base_dir = {})
      : entries_(std::move(entries)), base_(std::move(base_dir)) {
    validate();
  }

  const std::vector<ManifestEntry>& entries() const noexcept { return entries_; }
  const std::filesystem::path& base_dir() const noexcept { return base_; }
  std::size_t size() const noexcept { return entries_.size(); }

  std::filesystem::path resolve(const ManifestEntry& e) const {
    std::filesystem::path p(e.cube_path);
    return p.is_absolute() || base_.empty() ? p : base_ / p;
  }

  std::vector<ManifestEntry> split(Split s) const {
    std::vector<ManifestEntry> out;
    for (const auto& e : entries_)
      if (e.split == s) out.push_back(e);
    return out;
  }

  void save(const std::filesystem::path& path) const {
    nlohmann::json j;
    j["entries"] = entries_;
    std::ofstream out(path);
    if (!out) throw FormatError(FormatError::Kind::Io, "cannot write " + path.string());
    out << j.dump(2) << '\n';
  }

  static DatasetManifest load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError(FormatError::Kind::Io, "cannot open manifest " + path.string());
    try {
      auto j = nlohmann::json::parse(in);
      auto entries = j.at("entries").get<std::vector<ManifestEntry>>();
      return DatasetManifest(std::move(entries), path.parent_path());
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(FormatError::Kind::Malformed, std::string("manifest: ") + e.what());
    }
  }

 private:
  void validate() const {
    std::set<std::string> seen;
    for (const auto& e : entries_)
      if (!seen.insert(e.cube_path).second)
        throw InvalidArgument("manifest: duplicate cube_path " + e.cube_path);
  }

  std::vector<ManifestEntry> entries_;
  std::filesystem::path base_;
};

// ---------------------------------------------------------------------------
// Min-max normalization over the training split

struct NormStats {
  double v_min = 0.0;
  double v_max = 1.0;

  double apply(double v) const { return (v - v_min) / (v_max - v_min); }
  double invert(double u) const { return v_min + u * (v_max - v_min); }
  double range() const { return v_max - v_min; }
};

inline void to_json(nlohmann::json& j, const NormStats& n) {
  j = {{"v_min", n.v_min}, {"v_max", n.v_max}};
}
inline void from_json(const nlohmann::json& j, NormStats& n) {
  j.at("v_min").get_to(n.v_min);
  j.at("v_max").get_to(n.v_max);
}

inline NormStats fit_norm(std::span<const VelocityCube> train) {
  if (train.empty()) throw InvalidArgument("fit_norm: empty training set");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& c : train)
    for (double v : c.values) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  if (!(hi > lo)) throw DegenerateDataError("fit_norm: v_max == v_min");
  return {lo, hi};
}

// No clamping: values outside the training range map outside [0, 1].
inline std::vector<double> apply_norm(std::span<const double> v, const NormStats& s) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = s.apply(v[i]);
  return out;
}

inline std::vector<double> invert_norm(std::span<const double> u, const NormStats& s) {
  std::vector<double> out(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = s.invert(u[i]);
  return out;
}

}  // namespace swsfno
