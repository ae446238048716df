#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "qsky/error.hpp"

namespace qsky {

using Complex = std::complex<double>;
using Matrix2c = Eigen::Matrix2cd;
using Matrix4c = Eigen::Matrix4cd;
using Vector4c = Eigen::Vector4cd;

enum class Polarization { H, V, D, A, R, L };

inline std::string_view to_string(Polarization p) {
  switch (p) {
    case Polarization::H: return "H";
    case Polarization::V: return "V";
    case Polarization::D: return "D";
    case Polarization::A: return "A";
    case Polarization::R: return "R";
    case Polarization::L: return "L";
  }
  return "?";
}

inline Polarization parse_polarization(std::string_view s) {
  if (s == "H") return Polarization::H;
  if (s == "V") return Polarization::V;
  if (s == "D") return Polarization::D;
  if (s == "A") return Polarization::A;
  if (s == "R") return Polarization::R;
  if (s == "L") return Polarization::L;
  throw ValidationError("unknown polarization label '" + std::string(s) + "'");
}

inline bool orthogonal(Polarization p, Polarization q) {
  auto pair_id = [](Polarization x) { return static_cast<int>(x) / 2; };
  return p != q && pair_id(p) == pair_id(q);
}

/// Hybrid OAM-polarization state (|l1>|P1> + e^{i delta}|l2>|P2>)/sqrt(2).
struct HybridStateSpec {
  int ell1 = 0;
  int ell2 = 1;
  double delta = 0.0;
  Polarization pol1 = Polarization::H;
  Polarization pol2 = Polarization::V;

  int delta_ell() const { return ell2 - ell1; }

  void validate() const {
    detail::require(std::isfinite(delta), "relative phase delta must be finite");
    detail::require(orthogonal(pol1, pol2), "polarization labels must form an orthogonal pair");
  }
};

/// Two-qubit density matrix in the ordered basis {l1 P1, l1 P2, l2 P1, l2 P2}.
/// Hermiticity and unit trace are enforced on construction; positivity is not,
/// so that linear-inversion estimates can be represented and inspected.
class DensityMatrix4 {
 public:
  static constexpr double kHermitianTolerance = 1e-12;
  static constexpr double kTraceTolerance = 1e-12;
  static constexpr double kEigenTolerance = 1e-10;

  explicit DensityMatrix4(const Matrix4c& m, std::optional<double> noise_weight = std::nullopt)
      : noise_weight_(noise_weight) {
    detail::require(m.allFinite(), "density matrix has non-finite entries");
    const double skew = (m - m.adjoint()).cwiseAbs().maxCoeff();
    detail::require(skew <= kHermitianTolerance, "density matrix is not Hermitian");
    detail::require(std::abs(m.trace() - Complex(1.0, 0.0)) <= kTraceTolerance,
                    "density matrix trace differs from 1");
    m_ = 0.5 * (m + m.adjoint());
  }

  static DensityMatrix4 maximally_mixed() { return DensityMatrix4(Matrix4c::Identity() / 4.0, 0.0); }

  const Matrix4c& matrix() const { return m_; }
  Complex operator()(int row, int col) const { return m_(row, col); }
  std::optional<double> noise_weight() const { return noise_weight_; }

  Eigen::Vector4d eigenvalues() const {
    return Eigen::SelfAdjointEigenSolver<Matrix4c>(m_, Eigen::EigenvaluesOnly).eigenvalues();
  }
  bool is_physical(double tol = kEigenTolerance) const { return eigenvalues().minCoeff() >= -tol; }

 private:
  Matrix4c m_;
  std::optional<double> noise_weight_;
};

inline Vector4c state_vector(const HybridStateSpec& spec) {
  spec.validate();
  Vector4c psi = Vector4c::Zero();
  psi(0) = 1.0 / std::sqrt(2.0);
  psi(3) = std::polar(1.0 / std::sqrt(2.0), spec.delta);
  return psi;
}

inline DensityMatrix4 pure_state(const HybridStateSpec& spec) {
  const Vector4c psi = state_vector(spec);
  return DensityMatrix4(psi * psi.adjoint(), 1.0);
}

inline double purity(const DensityMatrix4& rho) {
  return (rho.matrix() * rho.matrix()).trace().real();
}

/// rho -> p rho + (1 - p) I/4 for a pure input state.
inline DensityMatrix4 apply_isotropic_noise(const DensityMatrix4& rho_pure, double p) {
  detail::require(std::isfinite(p) && p >= 0.0 && p <= 1.0, "noise weight p must lie in [0, 1]");
  detail::require(std::abs(purity(rho_pure) - 1.0) <= 1e-9, "isotropic noise expects a pure input state");
  Matrix4c out = p * rho_pure.matrix() + (1.0 - p) / 4.0 * Matrix4c::Identity();
  // the convex mixture can drift the trace by an ulp
  out /= out.trace().real();
  return DensityMatrix4(out, p);
}

/// Purity of the isotropic channel output at weight p.
inline double purity_from_weight(double p) { return p * p + (1.0 - p * p) / 4.0; }

inline double weight_from_purity(double gamma) {
  detail::require(gamma >= 0.25 && gamma <= 1.0, "purity must lie in [0.25, 1]");
  return std::sqrt((4.0 * gamma - 1.0) / 3.0);
}

inline double contrast_to_p(double qc, int d = 2) {
  detail::require(d >= 2, "dimension d must be at least 2");
  detail::require(std::isfinite(qc) || qc == std::numeric_limits<double>::infinity(), "quantum contrast is NaN");
  detail::require(qc >= 1.0, "quantum contrast below 1 is unphysical");
  if (std::isinf(qc)) return 1.0;
  return (qc - 1.0) / (qc - 1.0 + d);
}

/// Inverse of contrast_to_p; returns +inf at p = 1.
inline double p_to_contrast(double p, int d = 2) {
  detail::require(d >= 2, "dimension d must be at least 2");
  detail::require(p >= 0.0 && p <= 1.0, "noise weight p must lie in [0, 1]");
  if (p == 1.0) return std::numeric_limits<double>::infinity();
  return (1.0 - p + p * d) / (1.0 - p);
}

inline double contrast_to_purity(double qc, int d = 2) {
  detail::require(qc >= 1.0, "quantum contrast below 1 is unphysical");
  if (std::isinf(qc)) return 1.0;
  const double dd = static_cast<double>(d);
  const double s = dd + qc - 1.0;
  return (dd * (qc * qc - 2.0 * qc + 2.0) + 2.0 * (qc - 1.0)) / (dd * s * s);
}

/// Closed form of contrast_to_purity for d = 2, written in terms of (Qc-1)/(Qc+1).
inline double contrast_to_purity_two_qubit(double qc) {
  detail::require(qc >= 1.0, "quantum contrast below 1 is unphysical");
  if (std::isinf(qc)) return 1.0;
  const double x = (qc - 1.0) / (qc + 1.0);
  return 0.25 * (3.0 * x * x + 1.0);
}

}  // namespace qsky
