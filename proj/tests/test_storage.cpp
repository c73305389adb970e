#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <set>

#include "swsfno/storage.hpp"
#include "swsfno/synth.hpp"

using namespace swsfno;
namespace fs = std::filesystem;

namespace {

VelocityCube small_cube(std::uint64_t seed) {
  VelocityCube c(RadialGrid::uniform(3), make_grid(4, 8));
  Rng rng(seed);
  for (double& v : c.values) v = rng.uniform(250.0, 750.0);
  return c;
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / "swsfno_test_storage";
  fs::create_directories(dir);
  return dir / name;
}

FormatError::Kind decode_kind(std::span<const unsigned char> bytes) {
  try {
    decode_cube(bytes);
  } catch (const FormatError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "decode succeeded";
  return FormatError::Kind::Io;
}

}  // namespace

TEST(CubeFile, RoundTripIsBitExact) {
  auto c = small_cube(1);
  c.values[5] = 1e-300;
  c.values[6] = std::nextafter(400.0, 500.0);
  const auto path = scratch("rt.hwc");
  write_cube(c, path);
  const auto back = read_cube(path);
  ASSERT_TRUE(back.same_dims(c));
  EXPECT_EQ(std::memcmp(back.values.data(), c.values.data(), 8 * c.values.size()), 0);
  EXPECT_EQ(back.radial.radii(), c.radial.radii());
}

TEST(CubeFile, HeaderLayout) {
  const auto bytes = encode_cube(small_cube(2));
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "HWC1");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[5] | bytes[6] | bytes[7], 0);
  EXPECT_EQ(detail::get_u32(bytes.data() + 8), 3u);
  EXPECT_EQ(detail::get_u32(bytes.data() + 12), 4u);
  EXPECT_EQ(detail::get_u32(bytes.data() + 16), 8u);
  EXPECT_EQ(bytes.size(), 20u + 8u * (3u + 3u * 4u * 8u));
}

TEST(CubeFile, MediumGridPayloadLength) {
  VelocityCube c(RadialGrid::uniform(140), make_grid(111, 128));
  std::fill(c.values.begin(), c.values.end(), 400.0);
  const auto bytes = encode_cube(c);
  EXPECT_EQ(bytes.size() - 20 - 8 * 140, 140u * 111u * 128u * 8u);
}

TEST(CubeFile, Errors) {
  auto bytes = encode_cube(small_cube(3));
  {
    auto b = bytes;
    std::memcpy(b.data(), "XXXX", 4);
    EXPECT_EQ(decode_kind(b), FormatError::Kind::BadMagic);
  }
  {
    auto b = bytes;
    b[4] = 2;
    EXPECT_EQ(decode_kind(b), FormatError::Kind::VersionMismatch);
  }
  {
    auto b = bytes;
    b.pop_back();
    EXPECT_EQ(decode_kind(b), FormatError::Kind::Truncated);
    EXPECT_EQ(decode_kind(std::span(bytes).first(10)), FormatError::Kind::Truncated);
  }
  {
    auto b = bytes;
    for (int i = 8; i < 20; ++i) b[i] = 0xFF;
    EXPECT_EQ(decode_kind(b), FormatError::Kind::DimensionOverflow);
  }
  {
    auto b = bytes;
    b.push_back(0);
    EXPECT_EQ(decode_kind(b), FormatError::Kind::Malformed);
  }
  EXPECT_THROW(read_cube(scratch("does_not_exist.hwc")), FormatError);
}

TEST(Sidecar, RoundTrip) {
  const auto path = scratch("meta.hwc");
  write_sidecar(path, {2200, Instrument::HMI, "unit test"});
  const auto m = read_sidecar(path);
  EXPECT_EQ(m.carrington_rotation, 2200);
  EXPECT_EQ(m.instrument, Instrument::HMI);
  EXPECT_EQ(m.provenance, "unit test");
}

TEST(Manifest, SplitByRotationAndDuplicates) {
  EXPECT_EQ(split_for_rotation(2169), Split::Train);
  EXPECT_EQ(split_for_rotation(2170), Split::Test);
  EXPECT_THROW(DatasetManifest({{"a.hwc", 1, Instrument::SYNTH, Split::Train},
                                {"a.hwc", 2, Instrument::SYNTH, Split::Test}}),
               InvalidArgument);
  DatasetManifest m({{"a.hwc", 2100, Instrument::KPO, Split::Train},
                     {"b.hwc", 2200, Instrument::MDI, Split::Test}});
  const auto path = scratch("manifest.json");
  m.save(path);
  const auto back = DatasetManifest::load(path);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back.split(Split::Test).at(0).cube_path, "b.hwc");
  EXPECT_EQ(back.resolve(back.entries()[0]), path.parent_path() / "a.hwc");
}

TEST(Norm, MidpointAndInverse) {
  const NormStats s{200.0, 700.0};
  EXPECT_DOUBLE_EQ(s.apply(450.0), 0.5);
  EXPECT_NEAR(s.apply(800.0), 1.2, 1e-15);
  for (double v : {210.5, 333.3, 699.99, 1000.0})
    EXPECT_NEAR(s.invert(s.apply(v)), v, 1e-12 * v);
}

TEST(Norm, FitOnTrainingSplit) {
  std::vector<VelocityCube> cubes = {small_cube(4), small_cube(5)};
  const auto s = fit_norm(cubes);
  for (const auto& c : cubes)
    for (double u : apply_norm(c.values, s)) {
      EXPECT_GE(u, 0.0);
      EXPECT_LE(u, 1.0);
    }
  VelocityCube flat(RadialGrid::uniform(2), make_grid(2, 4));
  std::fill(flat.values.begin(), flat.values.end(), 400.0);
  EXPECT_THROW(fit_norm(std::span(&flat, 1)), DegenerateDataError);
  EXPECT_THROW(fit_norm(std::span<const VelocityCube>()), InvalidArgument);
}

TEST(Synth, BoundaryDeterministicAndInRange) {
  const auto g = make_grid(24, 48);
  const auto a = synth_boundary(9, g, 6), b = synth_boundary(9, g, 6);
  EXPECT_EQ(a, b);
  for (double v : a) {
    EXPECT_GE(v, 250.0);
    EXPECT_LE(v, 750.0);
  }
  EXPECT_NE(a, synth_boundary(10, g, 6));
  EXPECT_THROW(synth_boundary(1, g, 24), InvalidArgument);
}

TEST(Synth, DegreeZeroBandIsConstant) {
  const auto f = synth_boundary(7, make_grid(12, 24), 0);
  for (double v : f) EXPECT_NEAR(v, f[0], 1e-12);
}

TEST(Synth, IdentityWarpReproducesHux) {
  SynthConfig cfg;
  cfg.n_r = 6;
  cfg.n_lat = 8;
  cfg.n_lon = 16;
  const auto data = synth_dataset(3, 2, cfg);
  const auto radial = RadialGrid::uniform(cfg.n_r);
  const auto grid = make_grid(cfg.n_lat, cfg.n_lon);
  for (const auto& s : data) {
    const auto h = hux::hux_f(s.boundary, radial, grid, cfg.hux);
    EXPECT_EQ(std::memcmp(h.values.data(), s.truth.values.data(), 8 * h.values.size()), 0);
  }
}

TEST(Synth, DatasetDistinctAndPhysical) {
  const auto cfg = desk_synth_config();
  const auto data = synth_dataset(1, 64, cfg);
  ASSERT_EQ(data.size(), 64u);
  std::set<std::uint64_t> seeds;
  std::set<std::vector<double>> boundaries;
  for (const auto& s : data) {
    seeds.insert(s.seed);
    boundaries.insert(s.boundary);
    EXPECT_TRUE(s.truth.physical());
  }
  EXPECT_EQ(seeds.size(), 64u);
  EXPECT_EQ(boundaries.size(), 64u);
  EXPECT_THROW(synth_dataset(1, 0, cfg), InvalidArgument);
}

TEST(Synth, WarpShiftsWholeCells) {
  std::vector<double> row = {1, 2, 3, 4};
  shift_row(row, kTwoPi / 4.0, kTwoPi / 4.0);
  EXPECT_EQ(row, (std::vector<double>{4, 1, 2, 3}));
}
