#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <ceres/ceres.h>
#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include "qsky/biphoton.hpp"
#include "qsky/error.hpp"

namespace qsky {

enum class PauliBasis { Z, X, Y };

inline char basis_label(PauliBasis b) {
  switch (b) {
    case PauliBasis::Z: return 'Z';
    case PauliBasis::X: return 'X';
    case PauliBasis::Y: return 'Y';
  }
  return '?';
}

inline PauliBasis parse_basis(char c) {
  switch (c) {
    case 'Z': return PauliBasis::Z;
    case 'X': return PauliBasis::X;
    case 'Y': return PauliBasis::Y;
    default: throw ValidationError(std::string("unknown measurement basis '") + c + "'");
  }
}

/// One eigenstate of a Pauli operator on a qubit: Z+ is |0>, i.e. l1 on
/// photon A and P1 on photon B.
struct QubitProjector {
  PauliBasis basis = PauliBasis::Z;
  int eigen = +1;

  Eigen::Vector2cd state() const {
    using namespace std::complex_literals;
    const double s = 1.0 / std::sqrt(2.0);
    switch (basis) {
      case PauliBasis::Z: return eigen > 0 ? Eigen::Vector2cd(1.0, 0.0) : Eigen::Vector2cd(0.0, 1.0);
      case PauliBasis::X: return Eigen::Vector2cd(s, eigen * s);
      case PauliBasis::Y: return Eigen::Vector2cd(s, eigen * s * 1.0i);
    }
    return {};
  }
  Matrix2c projector() const {
    const Eigen::Vector2cd v = state();
    return v * v.adjoint();
  }
  bool operator==(const QubitProjector&) const = default;
};

struct MeasurementSetting {
  QubitProjector a;
  QubitProjector b;

  Matrix4c projector() const { return Eigen::kroneckerProduct(a.projector(), b.projector()); }
  bool operator==(const MeasurementSetting&) const = default;
};

/// The six Pauli eigenstates per photon in the order Z+, Z-, X+, X-, Y+, Y-.
inline std::array<QubitProjector, 6> qubit_projectors() {
  return {{{PauliBasis::Z, +1}, {PauliBasis::Z, -1}, {PauliBasis::X, +1},
           {PauliBasis::X, -1}, {PauliBasis::Y, +1}, {PauliBasis::Y, -1}}};
}

/// Cartesian product of the per-photon projectors, photon A outer.
inline std::vector<MeasurementSetting> settings_36() {
  std::vector<MeasurementSetting> out;
  out.reserve(36);
  for (const auto& pa : qubit_projectors())
    for (const auto& pb : qubit_projectors()) out.push_back({pa, pb});
  return out;
}

enum class Sampling { Deterministic, Poisson };

/// Coincidence-counting source and detector model. Rates in Hz, times in s.
struct CountModel {
  double pair_rate = 1e5;
  double noise_rate_a = 0.0;
  double noise_rate_b = 0.0;
  double coincidence_window = 25e-9;
  double duration = 1.0;
  Sampling sampling = Sampling::Deterministic;
  std::uint64_t seed = 1;

  void validate() const {
    detail::require(pair_rate >= 0.0 && noise_rate_a >= 0.0 && noise_rate_b >= 0.0, "rates must be non-negative");
    detail::require(coincidence_window > 0.0, "coincidence window must be positive");
    detail::require(duration > 0.0, "integration time must be positive");
  }
};

struct SettingCounts {
  MeasurementSetting setting;
  double coincidences = 0.0;
  double singles_a = 0.0;
  double singles_b = 0.0;
};

/// Per-setting counts plus the generator parameters that produced them.
struct TomographyRecord {
  std::vector<SettingCounts> entries;
  double coincidence_window = 25e-9;
  double integration_time = 1.0;
  double pair_rate = 0.0;
  double noise_rate_a = 0.0;
  double noise_rate_b = 0.0;
  Sampling sampling = Sampling::Deterministic;
  std::uint64_t seed = 0;

  void validate() const {
    detail::require(coincidence_window > 0.0, "coincidence window must be positive");
    detail::require(integration_time > 0.0, "integration time must be positive");
    for (const auto& e : entries)
      detail::require(e.coincidences >= 0.0 && e.singles_a >= 0.0 && e.singles_b >= 0.0,
                      "counts must be non-negative");
  }

  /// Expected accidental coincidences T * A * B, with the singles taken as rates.
  double accidentals(const SettingCounts& e) const {
    return coincidence_window * e.singles_a * e.singles_b / integration_time;
  }
};

/// Expected (or Poisson-sampled) counts. Singles on each side are the
/// projected signal plus a flat noise rate; coincidences are true pairs plus
/// accidentals T * A * B.
inline TomographyRecord simulate_counts(const DensityMatrix4& rho, std::span<const MeasurementSetting> settings,
                                        const CountModel& model) {
  model.validate();
  TomographyRecord rec;
  rec.coincidence_window = model.coincidence_window;
  rec.integration_time = model.duration;
  rec.pair_rate = model.pair_rate;
  rec.noise_rate_a = model.noise_rate_a;
  rec.noise_rate_b = model.noise_rate_b;
  rec.sampling = model.sampling;
  rec.seed = model.seed;

  std::mt19937_64 rng(model.seed);
  auto draw = [&](double mean) {
    if (model.sampling == Sampling::Deterministic) return mean;
    if (mean <= 0.0) return 0.0;
    return static_cast<double>(std::poisson_distribution<long long>(mean)(rng));
  };

  const Matrix4c& m = rho.matrix();
  for (const auto& s : settings) {
    const Matrix4c pa = Eigen::kroneckerProduct(s.a.projector(), Matrix2c::Identity());
    const Matrix4c pb = Eigen::kroneckerProduct(Matrix2c::Identity(), s.b.projector());
    const double prob_a = std::max(0.0, (pa * m).trace().real());
    const double prob_b = std::max(0.0, (pb * m).trace().real());
    const double prob_ab = std::max(0.0, (s.projector() * m).trace().real());
    const double rate_a = model.pair_rate * prob_a + model.noise_rate_a;
    const double rate_b = model.pair_rate * prob_b + model.noise_rate_b;
    const double rate_c = model.pair_rate * prob_ab + model.coincidence_window * rate_a * rate_b;
    SettingCounts e{s};
    e.coincidences = draw(rate_c * model.duration);
    e.singles_a = draw(rate_a * model.duration);
    e.singles_b = draw(rate_b * model.duration);
    rec.entries.push_back(e);
  }
  return rec;
}

/// Cap applied when a record has (numerically) no accidentals.
inline constexpr double kContrastCap = 1e12;

struct ContrastEstimate {
  double value = 1.0;
  int used = 0;
  /// Settings skipped because A * B = 0.
  int excluded = 0;
  /// True when value was limited to kContrastCap.
  bool capped = false;
};

/// Mean over settings of C / (T A B), with A and B taken as rates.
inline ContrastEstimate average_quantum_contrast(const TomographyRecord& rec) {
  rec.validate();
  ContrastEstimate out;
  double sum = 0.0;
  for (const auto& e : rec.entries) {
    const double acc = rec.accidentals(e);
    if (!(acc > 0.0)) {
      ++out.excluded;
      continue;
    }
    sum += e.coincidences / acc;
    ++out.used;
  }
  detail::require(out.used > 0, "no setting has non-zero singles on both sides");
  out.value = sum / out.used;
  if (!(out.value <= kContrastCap)) {
    out.value = kContrastCap;
    out.capped = true;
  }
  return out;
}

/// Symmetric noise singles rate (same on both photons) for which the
/// deterministic average contrast of `rho` equals target_qc.
inline double noise_rate_for_contrast(const DensityMatrix4& rho, double target_qc, double pair_rate,
                                      double coincidence_window) {
  detail::require(target_qc > 1.0, "target contrast must exceed 1");
  detail::require(pair_rate > 0.0, "pair rate must be positive");
  const auto settings = settings_36();
  auto contrast_at = [&](double noise) {
    CountModel model;
    model.pair_rate = pair_rate;
    model.noise_rate_a = model.noise_rate_b = noise;
    model.coincidence_window = coincidence_window;
    return average_quantum_contrast(simulate_counts(rho, settings, model)).value;
  };
  detail::require(contrast_at(0.0) >= target_qc,
                  "target contrast exceeds what the pair rate and coincidence window allow");
  double lo = 0.0, hi = pair_rate;
  while (contrast_at(hi) > target_qc) {
    lo = hi;
    hi *= 2.0;
  }
  for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (contrast_at(mid) > target_qc) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

/// Coincidences minus their expected accidentals, floored at zero.
inline TomographyRecord subtract_accidentals(const TomographyRecord& rec) {
  TomographyRecord out = rec;
  for (auto& e : out.entries) e.coincidences = std::max(0.0, e.coincidences - rec.accidentals(e));
  return out;
}

namespace detail {

inline Matrix2c pauli_or_identity(int k) {
  using namespace std::complex_literals;
  Matrix2c s;
  switch (k) {
    case 0: s << 1.0, 0.0, 0.0, 1.0; break;
    case 1: s << 0.0, 1.0, 1.0, 0.0; break;
    case 2: s << 0.0, -1.0i, 1.0i, 0.0; break;
    default: s << 1.0, 0.0, 0.0, -1.0; break;
  }
  return s;
}

inline void require_complete(const TomographyRecord& rec) {
  rec.validate();
  detail::require(rec.entries.size() >= 16, "tomography record needs at least 16 settings");
  double total = 0.0;
  for (const auto& e : rec.entries) total += e.coincidences;
  detail::require(total > 0.0, "tomography record has no coincidences");
}

}  // namespace detail

/// Least-squares solve of C_k = Tr[Pi_k X] over Hermitian X, then rho = X / Tr X.
/// The result is Hermitian with unit trace but may have small negative eigenvalues.
inline DensityMatrix4 linear_inversion(const TomographyRecord& rec) {
  detail::require_complete(rec);
  const int rows = static_cast<int>(rec.entries.size());
  Eigen::MatrixXd design(rows, 16);
  Eigen::VectorXd counts(rows);
  for (int k = 0; k < rows; ++k) {
    const auto& e = rec.entries[k];
    const Matrix2c pa = e.setting.a.projector();
    const Matrix2c pb = e.setting.b.projector();
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        design(k, 4 * i + j) = (pa * detail::pauli_or_identity(i)).trace().real() *
                               (pb * detail::pauli_or_identity(j)).trace().real() / 4.0;
    counts(k) = e.coincidences;
  }
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  detail::require(qr.rank() == 16, "measurement settings are not tomographically complete");
  const Eigen::VectorXd x = qr.solve(counts);
  Matrix4c m = Matrix4c::Zero();
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      m += x(4 * i + j) / 4.0 *
           Matrix4c(Eigen::kroneckerProduct(detail::pauli_or_identity(i), detail::pauli_or_identity(j)));
  detail::require(m.trace().real() > 0.0, "inverted state has non-positive trace");
  m /= m.trace().real();
  return DensityMatrix4(0.5 * (m + m.adjoint()));
}

/// Nearest physical state by eigenvalue clipping and renormalization.
inline DensityMatrix4 clip_to_physical(const DensityMatrix4& rho) {
  const Eigen::SelfAdjointEigenSolver<Matrix4c> es(rho.matrix());
  const Eigen::Vector4d ev = es.eigenvalues().cwiseMax(0.0);
  Matrix4c m = es.eigenvectors() * ev.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
  m /= m.trace().real();
  return DensityMatrix4(0.5 * (m + m.adjoint()));
}

/// Lower-triangular factor L with rho = L L^dagger / Tr(L L^dagger).
/// Parameters: 4 real diagonal entries, then (re, im) of the 6 strictly lower entries row by row.
struct CholeskyParameters {
  static constexpr int kCount = 16;

  static Matrix4c factor(std::span<const double> theta) {
    Matrix4c l = Matrix4c::Zero();
    for (int i = 0; i < 4; ++i) l(i, i) = theta[i];
    int k = 4;
    for (int i = 1; i < 4; ++i)
      for (int j = 0; j < i; ++j, k += 2) l(i, j) = Complex(theta[k], theta[k + 1]);
    return l;
  }

  static Matrix4c state(std::span<const double> theta) {
    const Matrix4c l = factor(theta);
    Matrix4c m = l * l.adjoint();
    return m / m.trace().real();
  }

  /// Parameters of a positive definite rho (mixed with a little white noise if needed).
  static std::array<double, kCount> from_state(const DensityMatrix4& rho, double floor = 1e-6) {
    Matrix4c m = (1.0 - floor) * clip_to_physical(rho).matrix() + floor / 4.0 * Matrix4c::Identity();
    const Eigen::LLT<Matrix4c> llt(m);
    const Matrix4c l = llt.matrixL();
    std::array<double, kCount> theta{};
    for (int i = 0; i < 4; ++i) theta[i] = l(i, i).real();
    int k = 4;
    for (int i = 1; i < 4; ++i)
      for (int j = 0; j < i; ++j, k += 2) {
        theta[k] = l(i, j).real();
        theta[k + 1] = l(i, j).imag();
      }
    return theta;
  }
};

/// Multinomial log-likelihood sum_k C_k log(Tr[Pi_k rho] / sum_j Tr[Pi_j rho]).
inline double log_likelihood(const TomographyRecord& rec, const Matrix4c& rho) {
  double norm = 0.0;
  std::vector<double> probs;
  probs.reserve(rec.entries.size());
  for (const auto& e : rec.entries) {
    probs.push_back((e.setting.projector() * rho).trace().real());
    norm += probs.back();
  }
  double ll = 0.0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    const double c = rec.entries[k].coincidences;
    if (c == 0.0) continue;
    if (!(probs[k] > 0.0)) return -std::numeric_limits<double>::infinity();
    ll += c * std::log(probs[k] / norm);
  }
  return ll;
}

inline double log_likelihood(const TomographyRecord& rec, const DensityMatrix4& rho) {
  return log_likelihood(rec, rho.matrix());
}

/// Log-likelihood of the factor parameters and, if `gradient` is non-empty, its gradient.
inline double log_likelihood_theta(const TomographyRecord& rec, std::span<const double> theta,
                                   std::span<double> gradient = {}) {
  const Matrix4c l = CholeskyParameters::factor(theta);
  const Matrix4c m = l * l.adjoint();
  double total = 0.0, ll = 0.0;
  double prob_sum = 0.0;
  Matrix4c g = Matrix4c::Zero();
  std::vector<Matrix4c> projectors;
  for (const auto& e : rec.entries) {
    const Matrix4c proj = e.setting.projector();
    prob_sum += (proj * m).trace().real();
    const double c = e.coincidences;
    if (c == 0.0) continue;
    const double q = (proj * m).trace().real();
    if (!(q > 0.0)) return -std::numeric_limits<double>::infinity();
    ll += c * std::log(q);
    g += (c / q) * proj;
    total += c;
  }
  // the projector sum is a multiple of the identity for complete Pauli settings,
  // so normalizing by it equals normalizing by Tr M up to a constant
  ll -= total * std::log(prob_sum);
  if (!gradient.empty()) {
    Matrix4c s = Matrix4c::Zero();
    for (const auto& e : rec.entries) s += e.setting.projector();
    g -= (total / prob_sum) * s;
    const Matrix4c gl = g * l;
    for (int i = 0; i < 4; ++i) gradient[i] = 2.0 * gl(i, i).real();
    int k = 4;
    for (int i = 1; i < 4; ++i)
      for (int j = 0; j < i; ++j, k += 2) {
        gradient[k] = 2.0 * gl(i, j).real();
        gradient[k + 1] = 2.0 * gl(i, j).imag();
      }
  }
  return ll;
}

enum class MleInit { LinearInversion, MaximallyMixed };

struct MleOptions {
  MleInit init = MleInit::LinearInversion;
  int max_iters = 5000;
  /// Gradient tolerance of the normalized objective.
  double tol = 1e-13;
};

struct MleResult {
  DensityMatrix4 rho;
  double log_likelihood = 0.0;
  int iterations = 0;
  /// False when the optimizer stopped on the iteration limit or failed; rho is then the best iterate.
  bool converged = false;
};

namespace detail {

class NegativeLogLikelihood final : public ceres::FirstOrderFunction {
 public:
  explicit NegativeLogLikelihood(const TomographyRecord& rec) : rec_(rec) {
    for (const auto& e : rec.entries) scale_ += e.coincidences;
  }

  // Cost is the relative entropy of the model probabilities from the observed
  // frequencies: same minimizer and gradient as -loglik / total, but it
  // vanishes at a perfect fit, so small improvements stay resolvable.
  bool Evaluate(const double* parameters, double* cost, double* gradient) const override {
    const std::span<const double> theta(parameters, CholeskyParameters::kCount);
    const Matrix4c l = CholeskyParameters::factor(theta);
    const Matrix4c m = l * l.adjoint();
    std::vector<double> q;
    q.reserve(rec_.entries.size());
    double norm = 0.0;
    for (const auto& e : rec_.entries) {
      q.push_back((e.setting.projector() * m).trace().real());
      norm += q.back();
    }
    double d = 0.0;
    for (std::size_t k = 0; k < q.size(); ++k) {
      const double c = rec_.entries[k].coincidences;
      if (c == 0.0) continue;
      if (!(q[k] > 0.0)) return false;
      d += (c / scale_) * std::log((c / scale_) / (q[k] / norm));
    }
    if (!std::isfinite(d)) return false;
    cost[0] = d;
    if (gradient) {
      std::array<double, CholeskyParameters::kCount> grad{};
      log_likelihood_theta(rec_, theta, grad);
      for (int i = 0; i < CholeskyParameters::kCount; ++i) gradient[i] = -grad[i] / scale_;
    }
    return true;
  }
  int NumParameters() const override { return CholeskyParameters::kCount; }

 private:
  const TomographyRecord& rec_;
  double scale_ = 0.0;
};

}  // namespace detail

/// Maximum-likelihood state over the physical cone, via L-BFGS on the
/// positive-factor parametrization.
inline MleResult mle_reconstruct(const TomographyRecord& rec, const MleOptions& opt = {}) {
  detail::require_complete(rec);
  detail::require(opt.max_iters > 0, "max_iters must be positive");
  // Linear-inversion starts are mixed with a little white noise so the factor
  // is full rank. Two mixing levels are tried: the larger one leaves room to
  // move toward interior optima, the tiny one stays next to rank-deficient
  // optima, where the factor parametrization is too flat to approach from afar.
  std::vector<std::array<double, CholeskyParameters::kCount>> starts;
  if (opt.init == MleInit::LinearInversion) {
    const DensityMatrix4 lin = linear_inversion(rec);
    starts.push_back(CholeskyParameters::from_state(lin, 1e-6));
    starts.push_back(CholeskyParameters::from_state(lin, 1e-12));
  } else {
    starts.push_back(CholeskyParameters::from_state(DensityMatrix4::maximally_mixed(), 0.0));
  }

  ceres::GradientProblem problem(new detail::NegativeLogLikelihood(rec));
  ceres::GradientProblemSolver::Options options;
  options.line_search_direction_type = ceres::LBFGS;
  options.function_tolerance = 1e-16;
  options.parameter_tolerance = 1e-16;
  options.gradient_tolerance = opt.tol;
  options.logging_type = ceres::SILENT;

  std::array<double, CholeskyParameters::kCount> best{};
  double best_cost = std::numeric_limits<double>::infinity();
  bool best_converged = false;
  int iterations = 0;
  for (auto theta : starts) {
    // restarting clears the L-BFGS history after it stalls
    ceres::GradientProblemSolver::Summary summary;
    int used = 0;
    for (int round = 0; round < 4 && used < opt.max_iters; ++round) {
      options.max_num_iterations = opt.max_iters - used;
      ceres::Solve(options, problem, theta.data(), &summary);
      used += std::max(0, static_cast<int>(summary.iterations.size()) - 1);
      if (summary.termination_type != ceres::CONVERGENCE || !(summary.final_cost < summary.initial_cost)) break;
    }
    iterations += used;
    if (summary.final_cost < best_cost) {
      best_cost = summary.final_cost;
      best = theta;
      best_converged = summary.termination_type == ceres::CONVERGENCE;
    }
  }
  detail::require(std::isfinite(best_cost), "likelihood is not finite at any starting point");

  Matrix4c m = CholeskyParameters::state(best);
  MleResult out{DensityMatrix4(0.5 * (m + m.adjoint())), 0.0, iterations, best_converged};
  out.log_likelihood = log_likelihood(rec, out.rho);
  return out;
}

}  // namespace qsky
