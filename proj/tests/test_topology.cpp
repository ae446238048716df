#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "qsky/topology.hpp"

using namespace qsky;

namespace {

double n_of(const HybridStateSpec& s, double p, const GridSpec& g, double waist = 1.0) {
  return analyze_topology(apply_isotropic_noise(pure_state(s), p), s, g, {waist}).result.n;
}

GridSpec auto_grid(const HybridStateSpec& s, int samples = 256) { return {recommended_half_width(s), samples}; }

UnitVectorField constant_field(const GridSpec& g, double x, double y, double z) {
  const int n = g.samples_per_axis;
  return {g, Field2D<double>(n, x), Field2D<double>(n, y), Field2D<double>(n, z), Mask(n, 0), false};
}

// Winding over the square window from the boundary values of S3 alone: for an
// axisymmetric texture with phase winding dl, N = dl/(4 pi) * integral over
// phi of (S3(0) - S3(R(phi))).
double boundary_oracle(const HybridStateSpec& s, double half_width) {
  auto s3 = [&](double r) {
    auto env = [](int ell, double rr) {
      const int l = std::abs(ell);
      return 0.5 * (std::log(2.0 / (std::numbers::pi * std::tgamma(l + 1.0)))) +
             (l ? l * std::log(std::sqrt(2.0) * rr) : 0.0) - rr * rr;
    };
    const double d = 2.0 * (env(s.ell1, r) - env(s.ell2, r));
    return std::tanh(0.5 * d);  // (|a|^2 - |b|^2) in logs
  };
  const double centre = std::abs(s.ell1) < std::abs(s.ell2) ? 1.0 : -1.0;
  constexpr int kSteps = 200000;
  double sum = 0.0;
  for (int k = 0; k < kSteps; ++k) {
    const double phi = (k + 0.5) / kSteps * 2.0 * std::numbers::pi;
    const double r = half_width / std::max(std::abs(std::cos(phi)), std::abs(std::sin(phi)));
    sum += centre - s3(r);
  }
  return s.delta_ell() * sum * (2.0 * std::numbers::pi / kSteps) / (4.0 * std::numbers::pi);
}

}  // namespace

TEST(SkyrmionDensity, ConstantFieldHasNoDensity) {
  const GridSpec g{5.0, 64};
  const auto f = constant_field(g, 0.0, 0.0, 1.0);
  for (auto v : skyrmion_density(f, g).values()) EXPECT_EQ(v, 0.0);
  for (int res : {32, 64, 128}) {
    const GridSpec gr{5.0, res};
    EXPECT_EQ(skyrmion_number(constant_field(gr, 0.6, 0.0, 0.8), gr).n, 0.0);
  }
}

TEST(SkyrmionDensity, RejectsShapeMismatchAndBadOrder) {
  const GridSpec g{5.0, 64};
  const auto f = constant_field(g, 0.0, 0.0, 1.0);
  EXPECT_THROW(skyrmion_density(f, GridSpec{5.0, 32}), ValidationError);
  EXPECT_THROW(skyrmion_density(f, g, 3), ValidationError);
  EXPECT_THROW(skyrmion_density(f, g, 12), ValidationError);
}

TEST(SkyrmionDensity, InvariantUnderGlobalRotation) {
  const HybridStateSpec s{0, 2, 0.3};
  const GridSpec g{6.0, 96};
  const auto base = analyze_topology(pure_state(s), s, g);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> gauss;
  Eigen::Quaterniond q(gauss(rng), gauss(rng), gauss(rng), gauss(rng));
  const Eigen::Matrix3d rot = q.normalized().toRotationMatrix();
  UnitVectorField rotated = base.unit;
  for (int iy = 0; iy < 96; ++iy)
    for (int ix = 0; ix < 96; ++ix) {
      const Eigen::Vector3d v = rot * Eigen::Vector3d(base.unit.x(ix, iy), base.unit.y(ix, iy), base.unit.z(ix, iy));
      rotated.x(ix, iy) = v.x();
      rotated.y(ix, iy) = v.y();
      rotated.z(ix, iy) = v.z();
    }
  const auto d0 = skyrmion_density(base.unit, g);
  const auto d1 = skyrmion_density(rotated, g);
  for (int iy = 0; iy < 96; ++iy)
    for (int ix = 0; ix < 96; ++ix) ASSERT_NEAR(d0(ix, iy), d1(ix, iy), 1e-10);
}

TEST(SkyrmionNumber, UnitChargeMatchesBoundaryOracle) {
  for (auto [l1, l2] : {std::pair{0, 1}, {0, -1}, {1, 0}, {0, 2}, {1, 3}}) {
    const HybridStateSpec s{l1, l2};
    for (double hw : {5.0, 8.0}) {
      const GridSpec g{hw, 256};
      const double oracle = boundary_oracle(s, hw);
      EXPECT_NEAR(n_of(s, 1.0, g), oracle, 2e-4) << l1 << "," << l2 << " hw " << hw;
    }
  }
}

TEST(SkyrmionNumber, PureUnitChargeIsOne) {
  const HybridStateSpec s{0, 1};
  const auto r = analyze_topology(pure_state(s), s, auto_grid(s)).result;
  EXPECT_NEAR(r.n, 1.0, 1e-2);
  EXPECT_EQ(r.rounded_n, 1);
  EXPECT_NEAR(r.residual, std::abs(r.n - 1.0), 1e-15);
  EXPECT_EQ(r.grid_resolution, 256);
  EXPECT_EQ(r.density.size(), 256);
}

TEST(SkyrmionNumber, HalfMixedChargeThree) {
  const HybridStateSpec s{0, 3};
  EXPECT_NEAR(n_of(s, 0.5, auto_grid(s)), 3.0, 1e-2);
}

TEST(SkyrmionNumber, QuantizedForChargesUpToThree) {
  for (int l2 : {-3, -2, -1, 1, 2, 3}) {
    const HybridStateSpec s{0, l2};
    const auto g = auto_grid(s);
    EXPECT_GE(g.half_width, 5.0);
    const auto r = analyze_topology(pure_state(s), s, g).result;
    EXPECT_EQ(r.rounded_n, skyrmion_number_analytic(s));
    EXPECT_LT(r.residual, 1e-3) << "l2 " << l2;
  }
}

TEST(SkyrmionNumber, NoiseLeavesNUnchanged) {
  for (auto [l1, l2] : {std::pair{0, 1}, {0, -2}, {1, 3}, {2, -1}}) {
    const HybridStateSpec s{l1, l2, 0.8};
    const GridSpec g{6.0, 128};
    const double n1 = n_of(s, 1.0, g);
    for (int k = 1; k <= 20; ++k) EXPECT_NEAR(n_of(s, 0.05 * k, g), n1, 1e-6);
  }
}

TEST(SkyrmionNumber, StepToZeroAtMaximalMixing) {
  const HybridStateSpec s{0, 3};
  const auto r = analyze_topology(apply_isotropic_noise(pure_state(s), 0.0), s, auto_grid(s, 64)).result;
  EXPECT_EQ(r.n, 0.0);
  EXPECT_EQ(r.masked_fraction, 1.0);
  EXPECT_NEAR(n_of(s, 1e-3, auto_grid(s, 64)), n_of(s, 1.0, auto_grid(s, 64)), 1e-6);
}

TEST(SkyrmionNumber, IndependentOfRelativePhase) {
  const HybridStateSpec s{0, 2};
  const GridSpec g{6.0, 128};
  const double n0 = n_of(s, 0.7, g);
  for (double delta : {0.5, 1.7, 3.1, 4.4, 6.0}) EXPECT_NEAR(n_of({0, 2, delta}, 0.7, g), n0, 1e-6);
}

TEST(SkyrmionNumber, MirroredChargesFlipSign) {
  const GridSpec g{6.0, 128};
  for (auto [l1, l2] : {std::pair{0, 1}, {0, 3}, {1, -2}, {2, 3}}) {
    EXPECT_NEAR(n_of({-l1, -l2}, 1.0, g), -n_of({l1, l2}, 1.0, g), 1e-9);
    EXPECT_EQ(skyrmion_number_analytic({-l1, -l2}), -skyrmion_number_analytic({l1, l2}));
  }
}

TEST(SkyrmionNumber, SwappingChargesKeepsN) {
  // swapping l1 and l2 flips both the winding and the orientation of the core
  const GridSpec g{6.0, 128};
  for (auto [l1, l2] : {std::pair{0, 1}, {0, 3}, {1, -2}}) {
    EXPECT_NEAR(n_of({l2, l1}, 1.0, g), n_of({l1, l2}, 1.0, g), 1e-9);
    EXPECT_EQ(skyrmion_number_analytic({l2, l1}), skyrmion_number_analytic({l1, l2}));
  }
}

TEST(SkyrmionNumber, WaistDoublingWithScaledWindow) {
  const HybridStateSpec s{0, 3};
  const double hw = recommended_half_width(s);
  const double n1 = n_of(s, 1.0, {hw, 256}, 1.0);
  const double n2 = n_of(s, 1.0, {recommended_half_width(s, 2.0), 256}, 2.0);
  EXPECT_NEAR(n1, n2, 1e-9);
  EXPECT_THROW(n_of(s, 1.0, {hw, 256}, 2.0), ValidationError);
}

TEST(SkyrmionNumber, DegenerateFieldShortCircuits) {
  const GridSpec g{5.0, 32};
  UnitVectorField f = constant_field(g, 0.0, 0.0, 0.0);
  f.degenerate = true;
  for (auto& m : f.mask.values()) m = 1;
  const auto r = skyrmion_number(f, g);
  EXPECT_EQ(r.n, 0.0);
  EXPECT_EQ(r.masked_fraction, 1.0);
  EXPECT_EQ(r.residual, 0.0);
}

TEST(SkyrmionNumberAnalytic, ChargeRule) {
  EXPECT_EQ(skyrmion_number_analytic({0, 1}), 1);
  EXPECT_EQ(std::abs(skyrmion_number_analytic({0, -3})), 3);
  EXPECT_EQ(skyrmion_number_analytic({0, -3}), -3);
  EXPECT_EQ(skyrmion_number_analytic({2, -1}), 3);
  EXPECT_EQ(skyrmion_number_analytic({1, 0}), 1);
  EXPECT_THROW(skyrmion_number_analytic({1, 1}), ValidationError);
  EXPECT_THROW(skyrmion_number_analytic({2, -2}), ValidationError);
}

TEST(ConvergenceScan, ResidualFallsWithResolution) {
  const HybridStateSpec s{0, 1};
  const int res[] = {64, 128, 256};
  const auto t = convergence_scan(s, 1.0, res, recommended_half_width(s));
  ASSERT_EQ(t.rows.size(), 3u);
  EXPECT_TRUE(t.monotone);
  EXPECT_LT(t.rows.back().residual, 1e-3);
}

TEST(ConvergenceScan, EdgeCases) {
  const HybridStateSpec s{0, 2};
  EXPECT_THROW(convergence_scan(s, 1.0, std::span<const int>{}, 6.0), ValidationError);
  const int one[] = {64};
  const auto t = convergence_scan(s, 1.0, one, 6.0);
  EXPECT_EQ(t.rows.size(), 1u);
  EXPECT_FALSE(t.monotone);
}

TEST(ConvergenceScan, HalfWidthDoublingKeepsN) {
  const HybridStateSpec s{0, 3};
  const double hw = recommended_half_width(s);
  const double n1 = n_of(s, 1.0, {hw, 256});
  const double n2 = n_of(s, 1.0, {2.0 * hw, 256});
  EXPECT_NEAR(n1, n2, 1e-3);
}

TEST(ConvergenceScan, LowerOrderStencilConvergesSlower) {
  const HybridStateSpec s{0, 3};
  const GridSpec g{5.0, 128};
  const auto a = analyze_topology(pure_state(s), s, g, {1.0, 2}).result;
  const auto b = analyze_topology(pure_state(s), s, g, {1.0, 10}).result;
  EXPECT_GT(a.residual, b.residual);
}
