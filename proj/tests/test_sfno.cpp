#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"
#include "swsfno/sfno.hpp"

using namespace swsfno;
using swsfno::testing::brute_force_loss;
using swsfno::testing::tiny_config;

TEST(Init, DeterministicBoundedZeroBias) {
  SfnoConfig cfg = tiny_config();
  const auto a = init_params(cfg), b = init_params(cfg);
  EXPECT_EQ(a.values, b.values);
  cfg.seed = 43;
  EXPECT_NE(init_params(cfg).values, a.values);
  for (const auto& e : a.layout.entries) {
    for (std::size_t i = 0; i < e.size; ++i) {
      const double v = a.values[e.offset + i];
      switch (e.kind) {
        case ParamBlock::Kind::Bias:
          EXPECT_EQ(v, 0.0) << e.name;
          break;
        case ParamBlock::Kind::Skip:
          EXPECT_EQ(v, 1.0);
          break;
        case ParamBlock::Kind::Weight:
          EXPECT_LE(std::abs(v), std::sqrt(6.0 / static_cast<double>(e.fan_in + e.fan_out)));
          break;
        case ParamBlock::Kind::Spectral:
          EXPECT_LE(std::abs(v), spectral_init_scale(cfg));
          break;
      }
    }
  }
}

TEST(Layout, ShapesFromConfig) {
  SfnoConfig cfg;  // defaults: 4 x 64, l_max 110, 139 outputs
  const auto L = ParamLayout::build(cfg);
  EXPECT_EQ(L.spectral_size, 64u * 64u * 111u);
  EXPECT_EQ(L.blocks.size(), 4u);
  EXPECT_EQ(L.dec2.n_out, 139u);
  EXPECT_EQ(L.enc1.n_in, 3u);
  cfg.n_layers = 0;
  EXPECT_THROW(ParamLayout::build(cfg), InvalidArgument);
}

TEST(SpectralConv, IdentityAndZero) {
  const auto g = make_grid(8, 16);
  const ShtPlan plan(g, 7, 8);
  Rng rng(1);
  std::vector<double> f(3 * g.size());
  for (double& v : f) v = rng.normal();
  const auto a = plan.forward(f, 3);
  std::vector<double> w(3 * 3 * 8, 0.0);
  EXPECT_EQ(spectral_conv(a, w, SpectralWeights::RealPerDegree, 3).data,
            std::vector<cplx>(a.data.size()));
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t l = 0; l < 8; ++l) w[(c * 3 + c) * 8 + l] = 1.0;
  EXPECT_EQ(spectral_conv(a, w, SpectralWeights::RealPerDegree, 3).data, a.data);
  EXPECT_THROW(spectral_conv(a, std::vector<double>(5), SpectralWeights::RealPerDegree, 3),
               ShapeError);
}

TEST(SpectralConv, RotationEquivariance) {
  const auto g = make_grid(16, 32);
  for (auto mode : {SpectralWeights::RealPerDegree, SpectralWeights::ComplexPerMode}) {
    const ShtPlan plan(g, 15, 16);
    Rng rng(5);
    const std::size_t C = 3;
    std::vector<double> f(C * g.size());
    for (double& v : f) v = rng.normal();
    const std::size_t nw = mode == SpectralWeights::RealPerDegree
                               ? C * C * 16
                               : C * C * triangular_size(15, 16) * 2;
    std::vector<double> w(nw);
    for (double& v : w) v = rng.normal();
    auto layer = [&](std::span<const double> x) {
      return plan.inverse(spectral_conv(plan.forward(x, C), w, mode, C));
    };
    const auto base = layer(f);
    for (std::ptrdiff_t k : {1, 3, 16}) {
      const auto out = rotate_longitude(layer(rotate_longitude(f, g.n_lon(), k)), g.n_lon(), -k);
      for (std::size_t i = 0; i < out.size(); ++i) EXPECT_NEAR(out[i], base[i], 1e-8);
    }
  }
}

TEST(Loss, WorkedExamples) {
  EXPECT_DOUBLE_EQ(loss_l2_2d(std::vector<double>{3, 4, 0, 0}, std::vector<double>(4, 0.0),
                              {1, 1, 2, 2}),
                   5.0);
  // Channel norms 5 and 7.
  const std::vector<double> p = {3, 4, 0, 0, 7, 0, 0, 0};
  EXPECT_DOUBLE_EQ(loss_l2_2d(p, std::vector<double>(8, 0.0), {1, 2, 2, 2}), 6.0);
  EXPECT_EQ(loss_l2_2d(p, p, {1, 2, 2, 2}), 0.0);
  EXPECT_THROW(loss_l2_2d(p, p, {1, 1, 2, 2}), ShapeError);
}

TEST(Loss, MatchesBruteForceOracle) {
  Rng rng(99);
  for (int t = 0; t < 100; ++t) {
    const std::size_t B = 1 + rng.below(3), C = 1 + rng.below(4), H = 1 + rng.below(6),
                      W = 1 + rng.below(7);
    std::vector<double> a(B * C * H * W), b(a.size());
    for (double& v : a) v = rng.normal();
    for (double& v : b) v = rng.normal();
    const double expect = brute_force_loss(a, b, B, C, H, W);
    EXPECT_NEAR(loss_l2_2d(a, b, {B, C, H, W}), expect, 1e-12 * expect);
  }
}

TEST(Loss, GradientMatchesDifferences) {
  Rng rng(4);
  const BatchSpec s{2, 3, 2, 3};
  std::vector<double> a(s.size()), b(s.size());
  for (double& v : a) v = rng.normal();
  for (double& v : b) v = rng.normal();
  const auto g = loss_l2_2d_grad(a, b, s);
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto ap = a, am = a;
    ap[i] += 1e-6;
    am[i] -= 1e-6;
    EXPECT_NEAR((loss_l2_2d(ap, b, s) - loss_l2_2d(am, b, s)) / 2e-6, g[i], 1e-8);
  }
  for (double v : loss_l2_2d_grad(a, a, s)) EXPECT_EQ(v, 0.0);
}

TEST(Sfno, OutputShapeAndZeroDecoder) {
  SfnoConfig cfg = tiny_config(139);
  const auto g = make_grid(8, 16);
  const Sfno model(cfg, g);
  auto params = init_params(cfg);
  Rng rng(8);
  std::vector<double> boundary(g.size());
  for (double& v : boundary) v = rng.uniform(300.0, 700.0);
  const NormStats norm{250.0, 750.0};
  const auto cube = model.predict_cube(params, boundary, norm, RadialGrid::uniform(140));
  EXPECT_EQ(cube.n_r(), 140u);
  EXPECT_EQ(cube.n_lat(), 8u);
  EXPECT_EQ(cube.n_lon(), 16u);
  for (std::size_t c = 0; c < g.size(); ++c) EXPECT_EQ(cube.slice(0)[c], boundary[c]);

  const auto& d = params.layout.dec2;
  std::fill(params.values.begin() + static_cast<std::ptrdiff_t>(d.w),
            params.values.begin() + static_cast<std::ptrdiff_t>(d.w + d.n_in * d.n_out), 0.0);
  const auto flat = model.predict_cube(params, boundary, norm, RadialGrid::uniform(140));
  for (std::size_t i = g.size(); i < flat.values.size(); ++i) EXPECT_EQ(flat.values[i], 250.0);
}

TEST(Sfno, RotationEquivariantEndToEnd) {
  SfnoConfig cfg = tiny_config();
  const auto g = make_grid(8, 16);
  const Sfno model(cfg, g);
  const auto params = init_params(cfg);
  Rng rng(12);
  std::vector<double> x(g.size());
  for (double& v : x) v = rng.uniform();
  const auto base = model.forward(params, x);
  for (std::ptrdiff_t k : {1, 3, 8}) {
    const auto out =
        rotate_longitude(model.forward(params, rotate_longitude(x, g.n_lon(), k)), g.n_lon(), -k);
    for (std::size_t i = 0; i < out.size(); ++i) EXPECT_NEAR(out[i], base[i], 1e-8);
  }
}

TEST(Sfno, RejectsMismatchedInputs) {
  const auto g = make_grid(8, 16);
  const Sfno model(tiny_config(), g);
  auto params = init_params(tiny_config());
  EXPECT_THROW(model.forward(params, std::vector<double>(5)), ShapeError);
  EXPECT_THROW(model.forward(init_params(tiny_config(4)), std::vector<double>(g.size())),
               ShapeError);
  SfnoConfig big = tiny_config();
  big.l_max = 8;
  EXPECT_THROW(Sfno(big, g), InvalidArgument);
}

TEST(Gradient, MatchesCentralDifferences) {
  const auto g = make_grid(8, 16);
  for (auto mode : {SpectralWeights::RealPerDegree, SpectralWeights::ComplexPerMode}) {
    for (auto act : {Activation::GELU, Activation::Identity}) {
      SfnoConfig cfg = tiny_config();
      cfg.spectral = mode;
      cfg.activation = act;
      const Sfno model(cfg, g);
      const auto params = init_params(cfg);
      Rng rng(2718);
      const auto s1 = swsfno::testing::random_sample(rng, g.size(), 3 * g.size());
      const auto s2 = swsfno::testing::random_sample(rng, g.size(), 3 * g.size());
      const NormalizedSample* batch[] = {&s1, &s2};
      const auto r = swsfno::testing::finite_difference_check(model, params, batch, rng, 60);
      EXPECT_LT(r.max_rel, 1e-5);
    }
  }
}

TEST(Gradient, LossScaleIsLinear) {
  const auto g = make_grid(8, 16);
  const Sfno model(tiny_config(), g);
  const auto params = init_params(tiny_config());
  Rng rng(6);
  const auto s = swsfno::testing::random_sample(rng, g.size(), 3 * g.size());
  const NormalizedSample* batch[] = {&s};
  std::vector<double> g1(params.size()), g2(params.size());
  const double l1 = loss_and_gradient(model, params, batch, g1);
  const double l2 = loss_and_gradient(model, params, batch, g2, 2.0);
  EXPECT_EQ(l2, 2.0 * l1);
  for (std::size_t i = 0; i < g1.size(); ++i) EXPECT_EQ(g2[i], 2.0 * g1[i]);
}

TEST(Gradient, DeadSpectralDegreesGetNoGradient) {
  // With identity activations every layer is linear and pointwise, so a
  // field band-limited to l <= 2 (input and embedding alike) never excites
  // higher degrees.
  const auto g = make_grid(8, 16);
  SfnoConfig cfg = tiny_config();
  cfg.activation = Activation::Identity;
  const Sfno model(cfg, g);
  const auto params = init_params(cfg);
  NormalizedSample s;
  for (std::size_t j = 0; j < g.n_lat(); ++j)
    for (std::size_t k = 0; k < g.n_lon(); ++k) {
      const double x = g.cos_colatitudes()[j];
      s.input.push_back(0.5 + 0.2 * x + 0.1 * std::sqrt(1 - x * x) * std::cos(g.longitudes()[k]));
    }
  Rng rng(1);
  for (std::size_t i = 0; i < 3 * g.size(); ++i) s.target.push_back(rng.uniform());
  const NormalizedSample* batch[] = {&s};
  std::vector<double> grad(params.size());
  loss_and_gradient(model, params, batch, grad);
  const std::size_t L = cfg.l_max + 1;
  double live = 0.0;
  for (const auto& blk : params.layout.blocks)
    for (std::size_t pair = 0; pair < cfg.hidden * cfg.hidden; ++pair)
      for (std::size_t l = 0; l < L; ++l) {
        const double v = grad[blk.spectral + pair * L + l];
        if (l > 2)
          EXPECT_LT(std::abs(v), 1e-12);
        else
          live = std::max(live, std::abs(v));
      }
  EXPECT_GT(live, 1e-6);
}

TEST(Gradient, DivergenceRaised) {
  const auto g = make_grid(8, 16);
  const Sfno model(tiny_config(), g);
  auto params = init_params(tiny_config());
  params.values[params.layout.dec2.b] = std::numeric_limits<double>::infinity();
  Rng rng(2);
  const auto s = swsfno::testing::random_sample(rng, g.size(), 3 * g.size());
  const NormalizedSample* batch[] = {&s};
  std::vector<double> grad(params.size());
  EXPECT_THROW(loss_and_gradient(model, params, batch, grad), DivergenceError);
}

namespace {

std::vector<double> golden_input(const SphericalGrid& g) {
  std::vector<double> x(g.size());
  for (std::size_t j = 0; j < g.n_lat(); ++j)
    for (std::size_t k = 0; k < g.n_lon(); ++k)
      x[j * g.n_lon() + k] = 0.5 + 0.3 * std::sin(g.latitude(j)) * std::cos(g.longitudes()[k]) +
                             0.1 * std::cos(3.0 * g.longitudes()[k]);
  return x;
}

}  // namespace

TEST(Sfno, GoldenTinyModel) {
  // Regression anchor recorded from the first run of this configuration.
  const auto g = make_grid(8, 16);
  const Sfno model(tiny_config(), g);
  const auto y = model.forward(init_params(tiny_config()), golden_input(g));
  ASSERT_EQ(y.size(), 3u * g.size());
  double sum = 0.0, sq = 0.0;
  for (double v : y) {
    sum += v;
    sq += v * v;
  }
  EXPECT_NEAR(sum, 19.848793124452595, 1e-10);
  EXPECT_NEAR(sq, 33.783898941847866, 1e-10);
  EXPECT_NEAR(y[0], 0.21416434986181812, 1e-12);
  EXPECT_NEAR(y[100], -0.061709241106146701, 1e-12);
  EXPECT_NEAR(y[383], -0.28414945192432672, 1e-12);
}
