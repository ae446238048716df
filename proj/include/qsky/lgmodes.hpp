#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <limits>
#include <numbers>

#include "qsky/biphoton.hpp"
#include "qsky/error.hpp"
#include "qsky/grid.hpp"

namespace qsky {

/// One Laguerre-Gaussian mode at the waist plane.
struct ModeSpec {
  int ell = 0;
  double waist = 1.0;
  int radial_index = 0;

  void validate() const {
    detail::require(std::isfinite(waist) && waist > 0.0, "beam waist must be positive");
    detail::require(radial_index >= 0, "radial index must be non-negative");
  }
};

/// Natural log of |LG(r)|, -inf on nodes. Working in logs keeps the
/// envelope ratio finite far into the Gaussian tail.
inline double lg_log_envelope(double r, const ModeSpec& mode) {
  mode.validate();
  detail::require(std::isfinite(r) && r >= 0.0, "radius must be finite and non-negative");
  const int l = std::abs(mode.ell);
  const int p = mode.radial_index;
  const double w = mode.waist;
  // C^2 = 2 p! / (pi w^2 (p+|l|)!)
  const double log_norm =
      0.5 * (std::log(2.0 / (std::numbers::pi * w * w)) + std::lgamma(p + 1.0) - std::lgamma(p + l + 1.0));
  const double x = 2.0 * r * r / (w * w);
  double log_radial = 0.0;
  if (l > 0) log_radial = (r == 0.0) ? -std::numeric_limits<double>::infinity() : 0.5 * l * std::log(x);
  double log_laguerre = 0.0;
  if (p > 0) {
    const double lag = std::assoc_laguerre(static_cast<unsigned>(p), static_cast<unsigned>(l), x);
    log_laguerre = std::log(std::abs(lag));
  }
  return log_norm + log_radial + log_laguerre - r * r / (w * w);
}

/// LG_l(r, phi), L2-normalized over the plane.
inline Complex lg_amplitude(double r, double phi, const ModeSpec& mode) {
  detail::require(std::isfinite(r) && std::isfinite(phi), "lg_amplitude needs finite coordinates");
  detail::require(r >= 0.0, "radius must be non-negative");
  const double env = std::exp(lg_log_envelope(r, mode));
  return std::polar(env, mode.ell * phi);
}

/// Radius of the envelope maximum, located by a dense scan plus golden-section refinement.
inline double lg_peak_radius(const ModeSpec& mode) {
  mode.validate();
  const double r_max = 3.0 * mode.waist * std::sqrt(std::abs(mode.ell) + 2.0 * mode.radial_index + 1.0);
  constexpr int kScan = 2048;
  int best = 0;
  double best_val = -std::numeric_limits<double>::infinity();
  for (int i = 0; i <= kScan; ++i) {
    const double v = lg_log_envelope(r_max * i / kScan, mode);
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  double lo = r_max * std::max(0, best - 1) / kScan;
  double hi = r_max * std::min(kScan, best + 1) / kScan;
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * mode.waist; ++it) {
    const double m1 = hi - g * (hi - lo);
    const double m2 = lo + g * (hi - lo);
    if (lg_log_envelope(m1, mode) < lg_log_envelope(m2, mode)) lo = m1; else hi = m2;
  }
  return 0.5 * (lo + hi);
}

/// Position-basis coefficients of the hybrid state, pointwise normalized:
/// a = |LG_l1| / eta, b = e^{i(dl phi + delta)} |LG_l2| / eta.
struct CoeffField {
  GridSpec grid;
  double waist = 1.0;
  double delta = 0.0;
  Field2D<Complex> a;
  Field2D<Complex> b;
  Mask mask;
};

namespace detail {

/// Minority weight min(|a|^2, |b|^2) at radius r; it is the fraction of the
/// Bloch sphere the texture has not yet reached on that ring.
inline double minority_weight(const HybridStateSpec& s, double waist, double r) {
  const double la = lg_log_envelope(r, {s.ell1, waist, 0});
  const double lb = lg_log_envelope(r, {s.ell2, waist, 0});
  const double gap = std::abs(la - lb);
  if (std::isnan(gap)) return 0.5;
  return 1.0 / (1.0 + std::exp(2.0 * gap));
}

/// Estimated Skyrmion number lost by truncating the plane to a square window.
inline double truncation_estimate(const HybridStateSpec& s, double waist, double half_width) {
  constexpr int kAngles = 256;
  double sum = 0.0;
  for (int j = 0; j < kAngles; ++j) {
    const double phi = (j + 0.5) / kAngles * std::numbers::pi / 4.0;
    sum += minority_weight(s, waist, half_width / std::cos(phi));
  }
  return std::abs(s.delta_ell()) * sum / kAngles;
}

}  // namespace detail

/// Throws when either mode's envelope on the nearest window edge exceeds
/// grid.envelope_cutoff times its peak.
inline void check_envelope_cutoff(const HybridStateSpec& state, const GridSpec& grid, double waist = 1.0) {
  if (grid.envelope_cutoff <= 0.0) return;
  for (int ell : {state.ell1, state.ell2}) {
    const ModeSpec mode{ell, waist, 0};
    const double rel = std::exp(lg_log_envelope(grid.half_width, mode) -
                                lg_log_envelope(lg_peak_radius(mode), mode));
    if (rel > grid.envelope_cutoff) {
      throw ValidationError("grid half_width " + std::to_string(grid.half_width) + " leaves the l=" +
                            std::to_string(ell) + " envelope at " + std::to_string(rel) +
                            " of its peak on the boundary (cutoff " + std::to_string(grid.envelope_cutoff) + ")");
    }
  }
}

/// Smallest half width, at least `minimum` (in waists) and honoring the
/// envelope cutoff, whose estimated truncation loss of N is below tail_tolerance.
/// The Delta-l = 1 textures approach the pole only algebraically, so their
/// windows are much wider than the mode envelope itself.
inline double recommended_half_width(const HybridStateSpec& state, double waist = 1.0,
                                     double tail_tolerance = 6e-4, double minimum = 5.0,
                                     double envelope_cutoff = 1e-6) {
  detail::require(tail_tolerance > 0.0, "tail tolerance must be positive");
  double lo = minimum * waist;
  if (envelope_cutoff > 0.0) {
    for (int ell : {state.ell1, state.ell2}) {
      const ModeSpec mode{ell, waist, 0};
      const double peak = lg_log_envelope(lg_peak_radius(mode), mode);
      const double target = peak + std::log(envelope_cutoff);
      double a = lg_peak_radius(mode), b = std::max(a, waist) * 64.0;
      for (int it = 0; it < 200; ++it) {
        const double m = 0.5 * (a + b);
        if (lg_log_envelope(m, mode) > target) a = m; else b = m;
      }
      lo = std::max(lo, b);
    }
  }
  if (std::abs(state.ell1) == std::abs(state.ell2)) return lo;
  if (detail::truncation_estimate(state, waist, lo) <= tail_tolerance) return lo;
  double a = lo, b = lo;
  while (detail::truncation_estimate(state, waist, b) > tail_tolerance) {
    a = b;
    b *= 2.0;
    detail::require(b < 1e6 * waist, "no finite window meets the requested tail tolerance");
  }
  for (int it = 0; it < 100; ++it) {
    const double m = 0.5 * (a + b);
    if (detail::truncation_estimate(state, waist, m) > tail_tolerance) a = m; else b = m;
  }
  return b;
}

inline CoeffField coeff_field(const HybridStateSpec& state, const GridSpec& grid, double waist = 1.0) {
  state.validate();
  grid.validate();
  detail::require(std::isfinite(waist) && waist > 0.0, "beam waist must be positive");
  check_envelope_cutoff(state, grid, waist);

  const int n = grid.samples_per_axis;
  CoeffField out{grid, waist, state.delta, Field2D<Complex>(n), Field2D<Complex>(n), Mask(n, 0)};
  const ModeSpec m1{state.ell1, waist, 0};
  const ModeSpec m2{state.ell2, waist, 0};
  const int dl = state.delta_ell();
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();

  for (int iy = 0; iy < n; ++iy) {
    const double y = grid.coordinate(iy);
    for (int ix = 0; ix < n; ++ix) {
      const double x = grid.coordinate(ix);
      const double r = std::hypot(x, y);
      const double phi = std::atan2(y, x);
      const double la = lg_log_envelope(r, m1);
      const double lb = lg_log_envelope(r, m2);
      double mag_a = 0.0, mag_b = 0.0;
      if (la == kNegInf && lb == kNegInf) {
        // both envelopes vanish; at the origin the lower |l| dominates the limit
        const int ka = std::abs(state.ell1), kb = std::abs(state.ell2);
        if (r == 0.0 && ka != kb) {
          (ka < kb ? mag_a : mag_b) = 1.0;
        } else {
          out.mask(ix, iy) = 1;
          continue;
        }
      } else {
        const double top = std::max(la, lb);
        const double ea = std::exp(la - top);
        const double eb = std::exp(lb - top);
        const double eta = std::hypot(ea, eb);
        mag_a = ea / eta;
        mag_b = eb / eta;
      }
      if (!std::isfinite(mag_a) || !std::isfinite(mag_b)) {
        out.mask(ix, iy) = 1;
        continue;
      }
      out.a(ix, iy) = Complex(mag_a, 0.0);
      out.b(ix, iy) = std::polar(mag_b, dl * phi + state.delta);
    }
  }
  return out;
}

}  // namespace qsky
