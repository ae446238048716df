#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include "qsky/biphoton.hpp"
#include "qsky/error.hpp"
#include "qsky/stokesfield.hpp"

namespace qsky {

namespace detail {

inline void require_physical(const DensityMatrix4& rho, const char* what) {
  detail::require(rho.is_physical(), std::string(what) + " is not positive semidefinite");
}

/// Eigenvalues within rounding of zero (relative to the largest) set to exactly
/// zero; the square roots taken downstream would otherwise lift them to ~1e-8.
inline Eigen::Vector4d snap_to_zero(Eigen::Vector4d ev) {
  const double floor = 64.0 * std::numeric_limits<double>::epsilon() * ev.cwiseAbs().maxCoeff();
  for (auto& v : ev) if (v < floor) v = 0.0;
  return ev;
}

/// Principal square root of a positive semidefinite Hermitian matrix.
inline Matrix4c psd_sqrt(const Matrix4c& m) {
  const Eigen::SelfAdjointEigenSolver<Matrix4c> es(m);
  const Eigen::Vector4d s = snap_to_zero(es.eigenvalues()).cwiseSqrt();
  return es.eigenvectors() * s.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace detail

/// Wootters concurrence: lambda_i are the decreasing square roots of the
/// eigenvalues of rho * rho_tilde, obtained here from the Hermitian form
/// sqrt(rho) rho_tilde sqrt(rho), which has the same spectrum.
inline double concurrence(const DensityMatrix4& rho) {
  detail::require_physical(rho, "state");
  const Matrix4c yy = Eigen::kroneckerProduct(pauli(2), pauli(2));
  const Matrix4c tilde = yy * rho.matrix().conjugate() * yy;
  const Matrix4c s = detail::psd_sqrt(rho.matrix());
  Matrix4c r = s * tilde * s;
  r = 0.5 * (r + r.adjoint());
  Eigen::Vector4d lam = Eigen::SelfAdjointEigenSolver<Matrix4c>(r, Eigen::EigenvaluesOnly).eigenvalues();
  lam = detail::snap_to_zero(lam).cwiseSqrt();
  std::sort(lam.data(), lam.data() + 4, std::greater<>());
  return std::max(0.0, lam(0) - lam(1) - lam(2) - lam(3));
}

/// Uhlmann fidelity (Tr sqrt(sqrt(target) rho sqrt(target)))^2.
inline double fidelity(const DensityMatrix4& rho, const DensityMatrix4& target) {
  detail::require_physical(rho, "state");
  detail::require_physical(target, "target state");
  const Matrix4c s = detail::psd_sqrt(target.matrix());
  Matrix4c inner = s * rho.matrix() * s;
  inner = 0.5 * (inner + inner.adjoint());
  const double tr = detail::psd_sqrt(inner).trace().real();
  return std::clamp(tr * tr, 0.0, 1.0);
}

struct WitnessReport {
  double purity = 0.0;
  double concurrence = 0.0;
  double fidelity = 0.0;
  HybridStateSpec against_target;
};

inline WitnessReport witnesses(const DensityMatrix4& rho, const HybridStateSpec& target) {
  return {purity(rho), concurrence(rho), fidelity(rho, pure_state(target)), target};
}

}  // namespace qsky
