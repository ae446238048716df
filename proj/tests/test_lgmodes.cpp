#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "qsky/lgmodes.hpp"

using namespace qsky;

namespace {

// Independent radial envelope for p = 0: sqrt(2/(pi |l|!)) (sqrt2 r)^|l| e^{-r^2}, w = 1.
double envelope(int ell, double r) {
  const int l = std::abs(ell);
  return std::sqrt(2.0 / (std::numbers::pi * std::tgamma(l + 1.0))) * std::pow(std::sqrt(2.0) * r, l) *
         std::exp(-r * r);
}

}  // namespace

TEST(LgAmplitude, VortexNullAtOrigin) {
  EXPECT_EQ(std::abs(lg_amplitude(0.0, 0.0, {1, 1.0, 0})), 0.0);
  EXPECT_GT(std::abs(lg_amplitude(0.0, 0.0, {0, 1.0, 0})), 0.0);
}

TEST(LgAmplitude, ModulusIsAzimuthallySymmetric) {
  for (int ell : {-3, -1, 0, 2, 5})
    for (double r : {0.1, 0.7, 1.9}) {
      const double m0 = std::abs(lg_amplitude(r, 0.3, {ell, 1.0, 0}));
      const double m1 = std::abs(lg_amplitude(r, 2.9, {ell, 1.0, 0}));
      EXPECT_NEAR(m0, m1, 1e-15);
    }
}

TEST(LgAmplitude, PhaseWindsWithCharge) {
  const auto z = lg_amplitude(1.0, 0.4, {3, 1.0, 0});
  EXPECT_NEAR(std::arg(z), 1.2, 1e-12);
}

TEST(LgAmplitude, MatchesClosedFormEnvelope) {
  for (int ell : {0, 1, 2, 4})
    for (double r : {0.05, 0.5, 1.3, 3.0})
      EXPECT_NEAR(std::abs(lg_amplitude(r, 0.0, {ell, 1.0, 0})), envelope(ell, r), 1e-13);
}

TEST(LgAmplitude, PeakRadiusAgreesWithBruteForceScan) {
  double best_r = 0.0, best = -1.0;
  for (int i = 0; i <= 400000; ++i) {
    const double r = 4.0 * i / 400000;
    if (envelope(2, r) > best) {
      best = envelope(2, r);
      best_r = r;
    }
  }
  EXPECT_NEAR(best_r, 1.0, 1e-4);
  EXPECT_NEAR(lg_peak_radius({2, 1.0, 0}), best_r, 1e-4);
  EXPECT_NEAR(lg_peak_radius({2, 1.0, 0}), 1.0, 1e-7);
  EXPECT_NEAR(lg_peak_radius({2, 2.0, 0}), 2.0, 1e-7);
}

TEST(LgAmplitude, UnitNormOverThePlane) {
  const GridSpec grid{7.0, 701};
  const double h = grid.spacing();
  for (int ell : {0, 1, 2, 3}) {
    double sum = 0.0;
    for (int iy = 0; iy < grid.samples_per_axis; ++iy)
      for (int ix = 0; ix < grid.samples_per_axis; ++ix) {
        const double x = grid.coordinate(ix), y = grid.coordinate(iy);
        sum += std::norm(lg_amplitude(std::hypot(x, y), std::atan2(y, x), {ell, 1.0, 0}));
      }
    EXPECT_NEAR(sum * h * h, 1.0, 1e-4) << "ell " << ell;
  }
}

TEST(LgAmplitude, RadialIndexModeIsNormalized) {
  const GridSpec grid{8.0, 801};
  const double h = grid.spacing();
  double sum = 0.0;
  for (int iy = 0; iy < grid.samples_per_axis; ++iy)
    for (int ix = 0; ix < grid.samples_per_axis; ++ix) {
      const double x = grid.coordinate(ix), y = grid.coordinate(iy);
      sum += std::norm(lg_amplitude(std::hypot(x, y), 0.0, {1, 1.0, 2}));
    }
  EXPECT_NEAR(sum * h * h, 1.0, 1e-4);
}

TEST(LgAmplitude, RejectsBadInput) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(lg_amplitude(nan, 0.0, {1}), ValidationError);
  EXPECT_THROW(lg_amplitude(1.0, std::numeric_limits<double>::infinity(), {1}), ValidationError);
  EXPECT_THROW(lg_amplitude(-1.0, 0.0, {1}), ValidationError);
  EXPECT_THROW(lg_amplitude(1.0, 0.0, {1, 0.0, 0}), ValidationError);
  EXPECT_THROW(lg_amplitude(1.0, 0.0, {1, 1.0, -1}), ValidationError);
}

TEST(CoeffField, PointwiseNormalized) {
  for (auto [l1, l2] : {std::pair{0, 1}, {0, 3}, {2, -1}, {1, -1}}) {
    const HybridStateSpec s{l1, l2, 0.4};
    const GridSpec grid{6.0, 128};
    const auto c = coeff_field(s, grid);
    double worst = 0.0;
    for (int iy = 0; iy < 128; ++iy)
      for (int ix = 0; ix < 128; ++ix)
        if (!c.mask(ix, iy)) worst = std::max(worst, std::abs(std::norm(c.a(ix, iy)) + std::norm(c.b(ix, iy)) - 1.0));
    EXPECT_LT(worst, 1e-12);
  }
}

TEST(CoeffField, RealPositiveOnPositiveXAxis) {
  const GridSpec grid{5.0, 65};  // odd count puts samples on the axis
  const auto c = coeff_field({0, 1, 0.0}, grid);
  const int iy = 32;
  for (int ix = 40; ix < 60; ++ix) {
    EXPECT_GT(c.b(ix, iy).real(), 0.0);
    EXPECT_NEAR(c.b(ix, iy).imag(), 0.0, 1e-15);
  }
}

TEST(CoeffField, OriginLimitFavoursLowerCharge) {
  const GridSpec grid{5.0, 65};
  const auto c = coeff_field({0, 1}, grid);
  EXPECT_EQ(c.mask(32, 32), 0);
  EXPECT_NEAR(std::abs(c.a(32, 32)), 1.0, 1e-15);
  EXPECT_NEAR(std::abs(c.b(32, 32)), 0.0, 1e-15);
  const auto d = coeff_field({3, 1}, grid);
  EXPECT_NEAR(std::abs(d.b(32, 32)), 1.0, 1e-15);
}

TEST(CoeffField, EqualChargeMagnitudesMaskTheOrigin) {
  const GridSpec grid{5.0, 65};
  const auto c = coeff_field({1, -1}, grid);
  EXPECT_EQ(c.mask(32, 32), 1);
  EXPECT_EQ(count_masked(c.mask), 1u);
}

TEST(CoeffField, FarTailStaysUnmasked) {
  const GridSpec grid{40.0, 64};
  const auto c = coeff_field({0, 3}, grid);
  EXPECT_EQ(count_masked(c.mask), 0u);
  EXPECT_NEAR(std::abs(c.b(0, 0)), 1.0, 1e-9);
}

TEST(CoeffField, EqualWeightContourMatchesBisection) {
  // root of |LG_0| = |LG_3| found independently
  double lo = 0.1, hi = 3.0;
  for (int it = 0; it < 200; ++it) {
    const double m = 0.5 * (lo + hi);
    if (envelope(0, m) > envelope(3, m)) lo = m; else hi = m;
  }
  const double r_half = 0.5 * (lo + hi);
  EXPECT_NEAR(r_half, std::pow(6.0, 1.0 / 6.0) / std::sqrt(2.0), 1e-12);

  // put a sample exactly on (r_half, 0)
  const int n = 201;
  const GridSpec grid{10.0 * r_half, n};  // x index 110 lands on r_half
  const auto c = coeff_field({0, 3}, grid);
  EXPECT_NEAR(grid.coordinate(110), r_half, 1e-12);
  EXPECT_NEAR(std::norm(c.b(110, 100)), 0.5, 1e-12);
  EXPECT_LT(std::norm(c.b(109, 100)), 0.5);
  EXPECT_GT(std::norm(c.b(111, 100)), 0.5);
}

TEST(CoeffField, AzimuthalPhaseFollowsChargeDifference) {
  const GridSpec grid{5.0, 65};
  const HybridStateSpec s{1, 3, 0.7};
  const auto c = coeff_field(s, grid);
  for (int ix = 0; ix < 65; ix += 7)
    for (int iy = 0; iy < 65; iy += 5) {
      if (c.mask(ix, iy) || std::abs(c.b(ix, iy)) < 1e-8) continue;
      const double phi = std::atan2(grid.coordinate(iy), grid.coordinate(ix));
      const std::complex<double> expect = std::polar(1.0, 2.0 * phi + 0.7);
      EXPECT_NEAR(std::abs(c.b(ix, iy) / std::abs(c.b(ix, iy)) - expect), 0.0, 1e-12);
      EXPECT_NEAR(c.a(ix, iy).imag(), 0.0, 0.0);
    }
}

TEST(CoeffField, RejectsWindowThatClipsTheEnvelope) {
  EXPECT_THROW(coeff_field({0, 3}, GridSpec{2.0, 64}), ValidationError);
  EXPECT_NO_THROW(coeff_field({0, 3}, GridSpec{2.0, 64, 0.0}));
  EXPECT_THROW(coeff_field({0, 1}, GridSpec{5.0, 8}), ValidationError);
}

TEST(RecommendedHalfWidth, HonoursMinimumAndCutoff) {
  for (auto [l1, l2] : {std::pair{0, 1}, {0, 2}, {0, 3}, {2, 5}}) {
    const HybridStateSpec s{l1, l2};
    const double hw = recommended_half_width(s);
    EXPECT_GE(hw, 5.0);
    EXPECT_NO_THROW(check_envelope_cutoff(s, GridSpec{hw, 64}));
    EXPECT_LE(detail::truncation_estimate(s, 1.0, hw), 6e-4 * (1 + 1e-9));
  }
  EXPECT_NEAR(recommended_half_width({0, 3}, 2.0), 2.0 * recommended_half_width({0, 3}, 1.0), 1e-9);
  // unit |dl| decays algebraically and needs the widest window
  EXPECT_GT(recommended_half_width({0, 1}), recommended_half_width({0, 2}));
}
