#include <gtest/gtest.h>

#include <chrono>
#include <cmath>

#include "swsfno/sht.hpp"

using namespace swsfno;

namespace {

// Random coefficients of a real band-limited field; m = 0 and the sampled
// Nyquist order carry no imaginary part.
SpectralCoeffs random_coeffs(Rng& rng, const ShtPlan& plan, std::size_t channels = 1) {
  SpectralCoeffs c(plan.l_max(), plan.m_max(), channels);
  for (std::size_t ch = 0; ch < channels; ++ch)
    for (std::size_t l = 0; l <= plan.l_max(); ++l)
      for (std::size_t m = 0; m <= std::min(l, plan.m_max()); ++m) {
        const bool real = m == 0 || 2 * m == plan.grid().n_lon();
        c.at(ch, l, m) = cplx(rng.normal(), real ? 0.0 : rng.normal());
      }
  return c;
}

// Arbitrary coefficients, imaginary parts everywhere: the adjoint tests must
// hold on the full stored representation.
SpectralCoeffs raw_coeffs(Rng& rng, const ShtPlan& plan, std::size_t channels = 1) {
  SpectralCoeffs c(plan.l_max(), plan.m_max(), channels);
  for (auto& v : c.data) v = cplx(rng.normal(), rng.normal());
  return c;
}

std::vector<double> random_field(Rng& rng, std::size_t n) {
  std::vector<double> f(n);
  for (double& v : f) v = rng.normal();
  return f;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double dot(const SpectralCoeffs& a, const SpectralCoeffs& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i)
    s += a.data[i].real() * b.data[i].real() + a.data[i].imag() * b.data[i].imag();
  return s;
}

double rel_l2(std::span<const double> a, std::span<const double> b) {
  double e = 0.0, n = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    e += (a[i] - b[i]) * (a[i] - b[i]);
    n += b[i] * b[i];
  }
  return std::sqrt(e / n);
}

}  // namespace

TEST(Legendre, TriangularCount) {
  EXPECT_EQ(triangular_size(0, 0), 1u);
  EXPECT_EQ(triangular_size(3, 3), 10u);
  EXPECT_EQ(triangular_size(3, 1), 7u);
  SpectralCoeffs c(110, 64, 2);
  EXPECT_EQ(c.data.size(), 2 * triangular_size(110, 64));
}

TEST(Legendre, MatchesClosedFormP32) {
  // Unnormalized P_3^2(x) = 15 x (1 - x^2); orthonormal factor sqrt(7 / (4 pi) * 1/5!).
  std::vector<double> out(triangular_size(3, 3));
  for (double x : {-0.9, -0.3, 0.0, 0.41, 0.77}) {
    normalized_legendre(3, 3, x, out);
    const double expect = std::sqrt(7.0 / (4.0 * kPi) / 120.0) * 15.0 * x * (1.0 - x * x);
    EXPECT_NEAR(out[6 + 2], expect, 1e-14) << "x=" << x;
    EXPECT_NEAR(out[0], 1.0 / std::sqrt(4.0 * kPi), 1e-15);
  }
}

TEST(Legendre, StableToDegree512) {
  std::vector<double> out(triangular_size(512, 512));
  for (double x : {-0.999, -0.5, 0.0, 0.3, 0.9999}) {
    normalized_legendre(512, 512, x, out);
    for (double v : out) ASSERT_TRUE(std::isfinite(v));
  }
}

TEST(ShtPlan, RejectsModeCapsBeyondSampling) {
  const auto g = make_grid(8, 16);
  EXPECT_THROW(ShtPlan(g, 8, 4), InvalidArgument);
  EXPECT_THROW(ShtPlan(g, 7, 9), InvalidArgument);
  EXPECT_NO_THROW(ShtPlan(g, 7, 8));
}

TEST(ShtForward, ConstantField) {
  const auto g = make_grid(16, 32);
  const ShtPlan plan(g, 15, 16);
  const auto a = plan.forward(std::vector<double>(g.size(), 1.0));
  EXPECT_NEAR(a.at(0, 0, 0).real(), std::sqrt(4.0 * kPi), 1e-12);
  for (std::size_t i = 1; i < a.data.size(); ++i) EXPECT_LT(std::abs(a.data[i]), 1e-12);
}

TEST(ShtForward, ZeroField) {
  const auto g = make_grid(8, 16);
  const ShtPlan plan(g, 7, 8);
  for (const auto& v : plan.forward(std::vector<double>(g.size(), 0.0)).data)
    EXPECT_EQ(v, cplx(0.0, 0.0));
}

TEST(ShtForward, SingleHarmonicY32) {
  // Real field 2 Re(Y_32) = 2 Pbar_32(cos theta) cos(2 phi) carries a_32 = 1
  // under the stored m >= 0 convention.
  const auto g = make_grid(12, 24);
  const ShtPlan plan(g, 11, 12);
  std::vector<double> f(g.size());
  const double norm = std::sqrt(7.0 / (4.0 * kPi) / 120.0);
  for (std::size_t j = 0; j < g.n_lat(); ++j) {
    const double x = g.cos_colatitudes()[j];
    const double p = norm * 15.0 * x * (1.0 - x * x);
    for (std::size_t k = 0; k < g.n_lon(); ++k)
      f[j * g.n_lon() + k] = 2.0 * p * std::cos(2.0 * g.longitudes()[k]);
  }
  const auto a = plan.forward(f);
  for (std::size_t l = 0; l <= 11; ++l)
    for (std::size_t m = 0; m <= std::min<std::size_t>(l, 12); ++m) {
      const cplx expect = (l == 3 && m == 2) ? cplx(1.0, 0.0) : cplx(0.0, 0.0);
      EXPECT_LT(std::abs(a.at(0, l, m) - expect), 1e-12) << "l=" << l << " m=" << m;
    }
}

TEST(ShtInverse, ZeroAndConstant) {
  const auto g = make_grid(8, 16);
  const ShtPlan plan(g, 7, 8);
  SpectralCoeffs c(7, 8, 1);
  for (double v : plan.inverse(c)) EXPECT_EQ(v, 0.0);
  c.at(0, 0, 0) = std::sqrt(4.0 * kPi);
  for (double v : plan.inverse(c)) EXPECT_NEAR(v, 1.0, 1e-14);
}

TEST(Sht, RoundTripAndParseval) {
  const auto g = make_grid(32, 64);
  const ShtPlan plan(g, 31, 32);
  Rng rng(2024);
  const auto t0 = std::chrono::steady_clock::now();
  for (int trial = 0; trial < 50; ++trial) {
    const auto c = random_coeffs(rng, plan);
    const auto f = plan.inverse(c);
    const auto back = plan.inverse(plan.forward(f));
    EXPECT_LT(rel_l2(back, f), 1e-10);

    double grid_energy = 0.0;
    for (std::size_t j = 0; j < g.n_lat(); ++j)
      for (std::size_t k = 0; k < g.n_lon(); ++k)
        grid_energy += g.quad_weights()[j] * g.lon_step() * f[j * g.n_lon() + k] * f[j * g.n_lon() + k];
    double spec_energy = 0.0;
    for (std::size_t idx = 0; idx < c.data.size(); ++idx)
      spec_energy += plan.multiplicity(plan.order_of(idx)) * std::norm(c.data[idx]);
    EXPECT_NEAR(grid_energy / spec_energy, 1.0, 1e-10);
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_LT(secs, 5.0);
}

TEST(Sht, NonPowerOfTwoLongitudes) {
  const auto g = make_grid(10, 30);
  const ShtPlan plan(g, 9, 15);
  Rng rng(5);
  const auto c = random_coeffs(rng, plan);
  const auto f = plan.inverse(c);
  const auto a = plan.forward(f);
  for (std::size_t i = 0; i < c.data.size(); ++i) EXPECT_LT(std::abs(a.data[i] - c.data[i]), 1e-12);
}

TEST(Sht, RealFieldHasRealZonalCoefficients) {
  const auto g = make_grid(16, 32);
  const ShtPlan plan(g, 15, 16);
  Rng rng(9);
  const auto a = plan.forward(random_field(rng, g.size()));
  for (std::size_t l = 0; l <= 15; ++l) EXPECT_LT(std::abs(a.at(0, l, 0).imag()), 1e-12);
}

TEST(Sht, RotationIsPhaseShift) {
  const auto g = make_grid(16, 32);
  const ShtPlan plan(g, 15, 16);
  Rng rng(17);
  const auto f = plan.inverse(random_coeffs(rng, plan));
  const auto a = plan.forward(f);
  for (std::ptrdiff_t k : {1, 3, 16}) {
    const auto b = plan.forward(rotate_longitude(f, g.n_lon(), k));
    for (std::size_t idx = 0; idx < a.data.size(); ++idx) {
      const double m = static_cast<double>(plan.order_of(idx));
      const cplx expect = a.data[idx] * std::polar(1.0, -m * static_cast<double>(k) * g.lon_step());
      EXPECT_LT(std::abs(b.data[idx] - expect), 1e-10);
    }
  }
}

TEST(ShtAdjoint, DotProductIdentity) {
  Rng rng(77);
  for (auto [nl, nlon, lm, mm] : {std::tuple{8u, 16u, 7u, 8u}, std::tuple{32u, 64u, 31u, 32u},
                                 std::tuple{12u, 30u, 9u, 6u}}) {
    const auto g = make_grid(nl, nlon);
    const ShtPlan plan(g, lm, mm);
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t ch = 1 + static_cast<std::size_t>(trial % 3);
      // inverse: coeffs -> field
      const auto x = raw_coeffs(rng, plan, ch);
      const auto y = random_field(rng, ch * g.size());
      const double lhs = dot(plan.inverse(x), y);
      const double rhs = dot(x, plan.adjoint_inverse(y, ch));
      EXPECT_LT(std::abs(lhs - rhs) / std::max(std::abs(lhs), 1e-300), 1e-12);
      // forward: field -> coeffs
      const auto u = random_field(rng, ch * g.size());
      const auto v = raw_coeffs(rng, plan, ch);
      const double lhs2 = dot(plan.forward(u, ch), v);
      const double rhs2 = dot(u, plan.adjoint_forward(v));
      EXPECT_LT(std::abs(lhs2 - rhs2) / std::max(std::abs(lhs2), 1e-300), 1e-12);
    }
  }
}

TEST(ShtAdjoint, ZeroAndLinearity) {
  const auto g = make_grid(8, 16);
  const ShtPlan plan(g, 7, 8);
  for (const auto& v : plan.adjoint_inverse(std::vector<double>(g.size(), 0.0)).data)
    EXPECT_EQ(v, cplx(0.0, 0.0));
  Rng rng(3);
  const auto y = random_field(rng, g.size());
  auto y3 = y;
  for (double& v : y3) v *= 3.0;
  const auto a = plan.adjoint_inverse(y), b = plan.adjoint_inverse(y3);
  for (std::size_t i = 0; i < a.data.size(); ++i)
    EXPECT_LT(std::abs(b.data[i] - 3.0 * a.data[i]), 1e-12 * (1.0 + std::abs(b.data[i])));
}

TEST(Sht, ResampleBandLimitedField) {
  const auto g = make_grid(8, 16);
  const ShtPlan plan(g, 5, 5);
  Rng rng(41);
  const auto c = random_coeffs(rng, plan);
  const auto f = plan.inverse(c);
  const auto fine = refine(g, 2);
  const auto f2 = resample(f, plan, fine);
  const ShtPlan fine_plan(fine, 5, 5);
  const auto c2 = fine_plan.forward(f2);
  for (std::size_t i = 0; i < c.data.size(); ++i) EXPECT_LT(std::abs(c2.data[i] - c.data[i]), 1e-12);
}
