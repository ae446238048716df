#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>

#include "qsky/biphoton.hpp"
#include "qsky/error.hpp"
#include "qsky/grid.hpp"
#include "qsky/lgmodes.hpp"

namespace qsky {

/// Pauli matrix in the (P1, P2) basis: 1 -> x, 2 -> y, 3 -> z. P1 is the +z eigenstate.
inline Matrix2c pauli(int axis) {
  using namespace std::complex_literals;
  Matrix2c s;
  switch (axis) {
    case 1: s << 0.0, 1.0, 1.0, 0.0; break;
    case 2: s << 0.0, -1.0i, 1.0i, 0.0; break;
    case 3: s << 1.0, 0.0, 0.0, -1.0; break;
    default: throw ValidationError("Pauli axis must be 1, 2 or 3");
  }
  return s;
}

/// Photon B's (unnormalized) state given photon A found at a position with
/// OAM overlaps <r|l1> = c1, <r|l2> = c2. The factor 2 undoes the 1/sqrt(2)
/// of the hybrid state so that channel outputs have unit trace.
inline Matrix2c conditional_state(const DensityMatrix4& rho, Complex c1, Complex c2) {
  const std::array<Complex, 2> c{c1, c2};
  const Matrix4c& m = rho.matrix();
  Matrix2c out = Matrix2c::Zero();
  for (int j = 0; j < 2; ++j)
    for (int k = 0; k < 2; ++k) out += c[j] * std::conj(c[k]) * m.block<2, 2>(2 * j, 2 * k);
  return 2.0 * out;
}

inline Matrix2c conditional_state(const DensityMatrix4& rho, const CoeffField& coeffs, GridPoint pt) {
  const int n = coeffs.grid.samples_per_axis;
  detail::require(pt.ix >= 0 && pt.iy >= 0 && pt.ix < n && pt.iy < n, "grid point out of range");
  detail::require(coeffs.mask(pt.ix, pt.iy) == 0, "conditional state requested at a masked point");
  // b carries the state's relative phase; the bare overlap <r|l2> does not
  const Complex c2 = coeffs.b(pt.ix, pt.iy) * std::polar(1.0, -coeffs.delta);
  return conditional_state(rho, coeffs.a(pt.ix, pt.iy), c2);
}

struct StokesField {
  GridSpec grid;
  Field2D<double> s0, s1, s2, s3;
  Mask mask;
  std::optional<double> noise_weight;
};

inline std::array<double, 4> stokes_vector(const Matrix2c& m) {
  return {m.trace().real(), (pauli(1) * m).trace().real(), (pauli(2) * m).trace().real(),
          (pauli(3) * m).trace().real()};
}

inline StokesField stokes_field(const DensityMatrix4& rho, const CoeffField& coeffs, const GridSpec& grid) {
  detail::require(coeffs.grid.same_sampling(grid), "coefficient field was sampled on a different grid");
  const int n = grid.samples_per_axis;
  StokesField out{grid, Field2D<double>(n), Field2D<double>(n), Field2D<double>(n), Field2D<double>(n),
                  coeffs.mask, rho.noise_weight()};
  for (int iy = 0; iy < n; ++iy) {
    for (int ix = 0; ix < n; ++ix) {
      if (coeffs.mask(ix, iy)) continue;
      const auto s = stokes_vector(conditional_state(rho, coeffs, {ix, iy}));
      out.s0(ix, iy) = s[0];
      out.s1(ix, iy) = s[1];
      out.s2(ix, iy) = s[2];
      out.s3(ix, iy) = s[3];
    }
  }
  return out;
}

/// Intensities behind the two eigenprojectors of one Pauli axis.
struct ProjectionPair {
  double i_plus = 0.0;
  double i_minus = 0.0;
  /// Additive contribution of the isotropic part, identical for both projectors.
  double noise_share = 0.0;
  double pure_plus = 0.0;
  double pure_minus = 0.0;

  double difference() const { return i_plus - i_minus; }
};

/// Isotropic weight of rho: the recorded channel weight if there is one,
/// otherwise inferred from the purity.
inline double isotropic_weight(const DensityMatrix4& rho) {
  if (rho.noise_weight()) return *rho.noise_weight();
  const double g = std::clamp(purity(rho), 0.25, 1.0);
  return weight_from_purity(g);
}

inline ProjectionPair projection_pair(const DensityMatrix4& rho, const CoeffField& coeffs, GridPoint pt, int axis) {
  const Matrix2c sigma = pauli(axis);
  const Matrix2c proj_plus = 0.5 * (Matrix2c::Identity() + sigma);
  const Matrix2c proj_minus = 0.5 * (Matrix2c::Identity() - sigma);
  const Matrix2c m = conditional_state(rho, coeffs, pt);
  ProjectionPair out;
  out.i_plus = (proj_plus * m).trace().real();
  out.i_minus = (proj_minus * m).trace().real();
  out.noise_share = (1.0 - isotropic_weight(rho)) / 2.0;
  out.pure_plus = out.i_plus - out.noise_share;
  out.pure_minus = out.i_minus - out.noise_share;
  return out;
}

/// Unit Stokes directions (S1, S2, S3)/|S|.
struct UnitVectorField {
  GridSpec grid;
  Field2D<double> x, y, z;
  Mask mask;
  /// Set when every point is masked, e.g. the maximally mixed state.
  bool degenerate = false;
};

inline UnitVectorField normalize_stokes(const StokesField& field, double eps = 1e-6) {
  detail::require(eps > 0.0, "degeneracy threshold must be positive");
  const int n = field.grid.samples_per_axis;
  UnitVectorField out{field.grid, Field2D<double>(n), Field2D<double>(n), Field2D<double>(n), field.mask, false};
  for (int iy = 0; iy < n; ++iy) {
    for (int ix = 0; ix < n; ++ix) {
      if (out.mask(ix, iy)) continue;
      const double sx = field.s1(ix, iy), sy = field.s2(ix, iy), sz = field.s3(ix, iy);
      const double norm = std::sqrt(sx * sx + sy * sy + sz * sz);
      if (!(norm >= eps)) {
        out.mask(ix, iy) = 1;
        continue;
      }
      out.x(ix, iy) = sx / norm;
      out.y(ix, iy) = sy / norm;
      out.z(ix, iy) = sz / norm;
    }
  }
  out.degenerate = count_masked(out.mask) == field.grid.point_count();
  return out;
}

}  // namespace qsky
