#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "qsky/biphoton.hpp"
#include "qsky/config.hpp"
#include "qsky/record_csv.hpp"
#include "qsky/stokesfield.hpp"
#include "qsky/tomography.hpp"
#include "qsky/topology.hpp"
#include "qsky/witnesses.hpp"

namespace qsky {

/// Quantization residual above which a p > 0 row counts as a numerical warning.
inline constexpr double kResidualWarning = 1e-2;

struct SweepRow {
  double p = 0.0;
  /// Contrast implied by p through the Qc <-> p bijection (+inf at p = 1).
  double quantum_contrast = 1.0;
  double purity = 0.0;
  double concurrence = 0.0;
  double fidelity = 0.0;
  double skyrmion_number = 0.0;
  double residual = 0.0;
  double masked_fraction = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  GridSpec grid;
  std::vector<std::string> warnings;
};

/// Density matrix the chosen pipeline produces for channel weight p.
/// The tomographic path simulates the 36-setting record, removes the expected
/// accidentals, and reconstructs.
inline DensityMatrix4 pipeline_state(const RunConfig& cfg, const HybridStateSpec& spec, double p,
                                     std::vector<std::string>* warnings = nullptr) {
  const DensityMatrix4 rho = apply_isotropic_noise(pure_state(spec), p);
  if (cfg.pipeline == Pipeline::Analytic) return rho;
  const auto settings = settings_36();
  const TomographyRecord rec = subtract_accidentals(simulate_counts(rho, settings, cfg.counts));
  if (cfg.reconstruction == Reconstruction::Linear) return clip_to_physical(linear_inversion(rec));
  MleOptions opt;
  opt.max_iters = cfg.mle_max_iters;
  const MleResult mle = mle_reconstruct(rec, opt);
  if (!mle.converged && warnings)
    warnings->push_back("maximum-likelihood reconstruction did not converge at p = " + std::to_string(p));
  return mle.rho;
}

inline SweepResult run_sweep(const RunConfig& cfg) {
  detail::require(!cfg.values.empty(), "sweep has no points; give values or start/stop/step");
  SweepResult out;
  out.grid = cfg.grid_for(cfg.state);
  const CoeffField coeffs = coeff_field(cfg.state, out.grid, cfg.waist);
  const DensityMatrix4 target = pure_state(cfg.state);
  for (double v : cfg.values) {
    SweepRow row;
    row.p = cfg.variable == SweepVariable::P ? v : contrast_to_p(v);
    row.quantum_contrast = cfg.variable == SweepVariable::P ? p_to_contrast(row.p) : v;
    const DensityMatrix4 rho = pipeline_state(cfg, cfg.state, row.p, &out.warnings);
    row.purity = purity(rho);
    row.concurrence = concurrence(rho);
    row.fidelity = fidelity(rho, target);
    const auto unit = normalize_stokes(stokes_field(rho, coeffs, out.grid), cfg.degeneracy_eps);
    const auto n = skyrmion_number(unit, out.grid, cfg.stencil_order);
    row.skyrmion_number = n.n;
    row.residual = n.residual;
    row.masked_fraction = n.masked_fraction;
    if (row.p > 0.0 && row.residual > kResidualWarning)
      out.warnings.push_back("quantization residual " + std::to_string(row.residual) + " at p = " +
                             std::to_string(row.p));
    out.rows.push_back(row);
  }
  return out;
}

struct GalleryEntry {
  HybridStateSpec spec;
  GridSpec grid;
  int n_analytic = 0;
  SkyrmionResult pure;
  SkyrmionResult noisy;
  UnitVectorField texture_pure;
  UnitVectorField texture_noisy;
};

struct GalleryResult {
  double p = 0.0;
  std::vector<GalleryEntry> entries;
  std::vector<std::string> warnings;
};

/// Textures and N for each spec at p = 1 and at the supplied p.
inline GalleryResult run_topology_gallery(std::span<const HybridStateSpec> specs, double p, const RunConfig& cfg) {
  detail::require(!specs.empty(), "gallery needs at least one state");
  detail::require(p >= 0.0 && p <= 1.0, "noise weight p must lie in [0, 1]");
  GalleryResult out;
  out.p = p;
  for (const auto& spec : specs) {
    GalleryEntry e;
    e.spec = spec;
    e.n_analytic = skyrmion_number_analytic(spec);
    e.grid = cfg.grid_for(spec);
    const auto opt = cfg.topology_options();
    auto pure = analyze_topology(pure_state(spec), spec, e.grid, opt);
    auto noisy = analyze_topology(apply_isotropic_noise(pure_state(spec), p), spec, e.grid, opt);
    e.pure = std::move(pure.result);
    e.noisy = std::move(noisy.result);
    e.texture_pure = std::move(pure.unit);
    e.texture_noisy = std::move(noisy.unit);
    if (e.pure.residual > kResidualWarning)
      out.warnings.push_back("quantization residual " + std::to_string(e.pure.residual) + " for (" +
                             std::to_string(spec.ell1) + ", " + std::to_string(spec.ell2) + ")");
    if (p > 0.0 && std::abs(e.pure.n - e.noisy.n) > 1e-6)
      out.warnings.push_back("N changed under noise for (" + std::to_string(spec.ell1) + ", " +
                             std::to_string(spec.ell2) + ")");
    out.entries.push_back(std::move(e));
  }
  return out;
}

inline ConvergenceTable run_convergence(const RunConfig& cfg) {
  const double hw = cfg.grid_for(cfg.state).half_width;
  return convergence_scan(cfg.state, cfg.p, cfg.resolutions, hw, cfg.topology_options());
}

// CSV writers. Values are printed with round-trip precision so identical
// inputs give byte-identical files.

namespace detail {

struct PrecisionGuard {
  explicit PrecisionGuard(std::ostream& os) : os_(os), old_(os.precision(std::numeric_limits<double>::max_digits10)) {}
  ~PrecisionGuard() { os_.precision(old_); }
  std::ostream& os_;
  std::streamsize old_;
};

inline void write_grid_metadata(std::ostream& os, const GridSpec& g) {
  os << "# half_width = " << g.half_width << '\n'
     << "# samples_per_axis = " << g.samples_per_axis << '\n'
     << "# spacing = " << g.spacing() << '\n';
}

inline void write_state_metadata(std::ostream& os, const HybridStateSpec& s) {
  os << "# ell1 = " << s.ell1 << '\n'
     << "# ell2 = " << s.ell2 << '\n'
     << "# delta = " << s.delta << '\n'
     << "# pol = " << to_string(s.pol1) << to_string(s.pol2) << '\n';
}

}  // namespace detail

inline void write_sweep_csv(std::ostream& os, const SweepResult& res, const RunConfig& cfg) {
  detail::PrecisionGuard guard(os);
  detail::write_state_metadata(os, cfg.state);
  detail::write_grid_metadata(os, res.grid);
  os << "# pipeline = " << (cfg.pipeline == Pipeline::Analytic ? "analytic" : "tomographic") << '\n';
  os << "p,quantum_contrast,purity,concurrence,fidelity,skyrmion_number,residual,masked_fraction\n";
  for (const auto& r : res.rows)
    os << r.p << ',' << r.quantum_contrast << ',' << r.purity << ',' << r.concurrence << ',' << r.fidelity << ','
       << r.skyrmion_number << ',' << r.residual << ',' << r.masked_fraction << '\n';
}

/// Unit texture, one row per grid point; masked points carry masked = 1 and zero vectors.
inline void write_texture_csv(std::ostream& os, const UnitVectorField& f, const HybridStateSpec& spec, double p) {
  detail::PrecisionGuard guard(os);
  detail::write_state_metadata(os, spec);
  detail::write_grid_metadata(os, f.grid);
  os << "# p = " << p << '\n';
  os << "x,y,S1,S2,S3,masked\n";
  const int n = f.grid.samples_per_axis;
  for (int iy = 0; iy < n; ++iy)
    for (int ix = 0; ix < n; ++ix)
      os << f.grid.coordinate(ix) << ',' << f.grid.coordinate(iy) << ',' << f.x(ix, iy) << ',' << f.y(ix, iy)
         << ',' << f.z(ix, iy) << ',' << static_cast<int>(f.mask(ix, iy)) << '\n';
}

inline void write_gallery_table(std::ostream& os, const GalleryResult& g) {
  detail::PrecisionGuard guard(os);
  os << "# p = " << g.p << '\n';
  os << "ell1,ell2,skyrmion_number_analytic,skyrmion_number_pure,skyrmion_number_noisy,residual_pure,residual_noisy\n";
  for (const auto& e : g.entries)
    os << e.spec.ell1 << ',' << e.spec.ell2 << ',' << e.n_analytic << ',' << e.pure.n << ',' << e.noisy.n << ','
       << e.pure.residual << ',' << e.noisy.residual << '\n';
}

inline void write_convergence_csv(std::ostream& os, const ConvergenceTable& t, const RunConfig& cfg) {
  detail::PrecisionGuard guard(os);
  detail::write_state_metadata(os, cfg.state);
  os << "# half_width = " << t.half_width << '\n'
     << "# p = " << cfg.p << '\n'
     << "# stencil_order = " << cfg.stencil_order << '\n'
     << "# monotone = " << (t.monotone ? "true" : "false") << '\n';
  os << "resolution,skyrmion_number,residual\n";
  for (const auto& r : t.rows) os << r.resolution << ',' << r.n << ',' << r.residual << '\n';
}

/// Skyrmion density, row-major: one line per y index, x increasing along the line.
inline void write_density_csv(std::ostream& os, const Field2D<double>& density, const GridSpec& grid) {
  detail::PrecisionGuard guard(os);
  detail::write_grid_metadata(os, grid);
  const int n = grid.samples_per_axis;
  for (int iy = 0; iy < n; ++iy) {
    for (int ix = 0; ix < n; ++ix) os << (ix ? "," : "") << density(ix, iy);
    os << '\n';
  }
}

inline void write_density_matrix_csv(std::ostream& os, const DensityMatrix4& rho) {
  detail::PrecisionGuard guard(os);
  os << "row,col,re,im\n";
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) os << i << ',' << j << ',' << rho(i, j).real() << ',' << rho(i, j).imag() << '\n';
}

inline std::ofstream open_output(const std::filesystem::path& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  std::ofstream f(dir / name);
  if (!f) throw ValidationError("cannot write '" + (dir / name).string() + "'");
  return f;
}

}  // namespace qsky
