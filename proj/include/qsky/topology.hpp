#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <span>
#include <vector>

#include "qsky/biphoton.hpp"
#include "qsky/error.hpp"
#include "qsky/grid.hpp"
#include "qsky/lgmodes.hpp"
#include "qsky/stokesfield.hpp"

namespace qsky {

/// Default accuracy order of the central-difference stencil.
inline constexpr int kDefaultStencilOrder = 10;

namespace detail {

/// First-derivative central weights for offsets 1..order/2.
inline std::span<const double> central_weights(int order) {
  static constexpr std::array<double, 1> w2{1.0 / 2};
  static constexpr std::array<double, 2> w4{2.0 / 3, -1.0 / 12};
  static constexpr std::array<double, 3> w6{3.0 / 4, -3.0 / 20, 1.0 / 60};
  static constexpr std::array<double, 4> w8{4.0 / 5, -1.0 / 5, 4.0 / 105, -1.0 / 280};
  static constexpr std::array<double, 5> w10{5.0 / 6, -5.0 / 21, 5.0 / 84, -5.0 / 504, 1.0 / 1260};
  switch (order) {
    case 2: return w2;
    case 4: return w4;
    case 6: return w6;
    case 8: return w8;
    case 10: return w10;
    default: throw ValidationError("stencil order must be one of 2, 4, 6, 8, 10");
  }
}

/// Derivative of a sampled line at index i. Interior points use the widest
/// central stencil that fits (up to `order`); the two end points use
/// second-order one-sided differences. Returns false when the stencil touches
/// a masked sample.
template <typename Sample, typename Masked>
bool line_derivative(int i, int n, double h, int order, Sample&& f, Masked&& masked, std::array<double, 3>& d) {
  d = {0.0, 0.0, 0.0};
  auto accumulate = [&](int j, double c) {
    if (masked(j)) return false;
    const auto v = f(j);
    for (int q = 0; q < 3; ++q) d[q] += c * v[q];
    return true;
  };
  if (i == 0 || i == n - 1) {
    const int s = (i == 0) ? 1 : -1;
    const bool ok = accumulate(i, -1.5 * s) && accumulate(i + s, 2.0 * s) && accumulate(i + 2 * s, -0.5 * s);
    for (auto& v : d) v /= h;
    return ok;
  }
  const int reach = std::min({order / 2, i, n - 1 - i});
  const auto w = central_weights(2 * reach);
  for (int k = 1; k <= reach; ++k) {
    if (!accumulate(i + k, w[k - 1]) || !accumulate(i - k, -w[k - 1])) return false;
  }
  for (auto& v : d) v /= h;
  return true;
}

}  // namespace detail

/// Sigma_z = S . (dS/dx x dS/dy) sampled on the grid; 0 where the stencil
/// touches a masked point.
inline Field2D<double> skyrmion_density(const UnitVectorField& field, const GridSpec& grid,
                                        int stencil_order = kDefaultStencilOrder) {
  detail::require(field.grid.same_sampling(grid) && field.x.size() == grid.samples_per_axis,
                  "vector field does not match the grid");
  detail::central_weights(stencil_order);
  const int n = grid.samples_per_axis;
  const double h = grid.spacing();
  Field2D<double> density(n, 0.0);
  if (field.degenerate) return density;

  auto vec = [&](int ix, int iy) { return std::array<double, 3>{field.x(ix, iy), field.y(ix, iy), field.z(ix, iy)}; };
  std::array<double, 3> dx{}, dy{};
  for (int iy = 0; iy < n; ++iy) {
    for (int ix = 0; ix < n; ++ix) {
      if (field.mask(ix, iy)) continue;
      const bool okx = detail::line_derivative(
          ix, n, h, stencil_order, [&](int j) { return vec(j, iy); }, [&](int j) { return field.mask(j, iy) != 0; }, dx);
      const bool oky = detail::line_derivative(
          iy, n, h, stencil_order, [&](int j) { return vec(ix, j); }, [&](int j) { return field.mask(ix, j) != 0; }, dy);
      if (!okx || !oky) continue;
      const auto s = vec(ix, iy);
      const double cx = dx[1] * dy[2] - dx[2] * dy[1];
      const double cy = dx[2] * dy[0] - dx[0] * dy[2];
      const double cz = dx[0] * dy[1] - dx[1] * dy[0];
      density(ix, iy) = s[0] * cx + s[1] * cy + s[2] * cz;
    }
  }
  return density;
}

struct SkyrmionResult {
  double n = 0.0;
  Field2D<double> density;
  /// Nearest integer to n; advisory only, residual says how far off it is.
  long rounded_n = 0;
  double residual = 0.0;
  int grid_resolution = 0;
  double masked_fraction = 0.0;
};

/// Trapezoidal quadrature of the density over the window, divided by 4 pi.
inline double integrate_density(const Field2D<double>& density, const GridSpec& grid) {
  const int n = grid.samples_per_axis;
  const double h = grid.spacing();
  double total = 0.0;
  for (int iy = 0; iy < n; ++iy) {
    const double wy = (iy == 0 || iy == n - 1) ? 0.5 : 1.0;
    double row = 0.0;
    for (int ix = 0; ix < n; ++ix) {
      const double wx = (ix == 0 || ix == n - 1) ? 0.5 : 1.0;
      row += wx * density(ix, iy);
    }
    total += wy * row;
  }
  return total * h * h;
}

inline SkyrmionResult skyrmion_number(const UnitVectorField& field, const GridSpec& grid,
                                      int stencil_order = kDefaultStencilOrder) {
  SkyrmionResult out;
  out.density = skyrmion_density(field, grid, stencil_order);
  out.grid_resolution = grid.samples_per_axis;
  out.masked_fraction = static_cast<double>(count_masked(field.mask)) / static_cast<double>(grid.point_count());
  if (field.degenerate) return out;
  out.n = integrate_density(out.density, grid) / (4.0 * std::numbers::pi);
  out.rounded_n = std::lround(out.n);
  out.residual = std::abs(out.n - static_cast<double>(out.rounded_n));
  return out;
}

/// Closed-form Skyrmion number of the hybrid state,
/// N = sign(|l2| - |l1|) * (l2 - l1), in the convention where P1 is the +z
/// Stokes pole and (S1, S2, S3) = (sigma_x, sigma_y, sigma_z).
inline int skyrmion_number_analytic(const HybridStateSpec& spec) {
  const int a1 = std::abs(spec.ell1), a2 = std::abs(spec.ell2);
  detail::require(a1 != a2, "|l1| = |l2| gives no well-defined skyrmion texture");
  const int orientation = (a2 > a1) ? 1 : -1;
  return orientation * spec.delta_ell();
}

/// Everything computed along the state -> Stokes -> unit field -> N chain.
struct TopologyAnalysis {
  CoeffField coeffs;
  StokesField stokes;
  UnitVectorField unit;
  SkyrmionResult result;
};

struct TopologyOptions {
  double waist = 1.0;
  int stencil_order = kDefaultStencilOrder;
  double degeneracy_eps = 1e-6;
};

inline TopologyAnalysis analyze_topology(const DensityMatrix4& rho, const HybridStateSpec& spec, const GridSpec& grid,
                                         const TopologyOptions& opt = {}) {
  TopologyAnalysis out;
  out.coeffs = coeff_field(spec, grid, opt.waist);
  out.stokes = stokes_field(rho, out.coeffs, grid);
  out.unit = normalize_stokes(out.stokes, opt.degeneracy_eps);
  out.result = skyrmion_number(out.unit, grid, opt.stencil_order);
  return out;
}

struct ConvergenceRow {
  int resolution = 0;
  double n = 0.0;
  double residual = 0.0;
};

struct ConvergenceTable {
  double half_width = 0.0;
  std::vector<ConvergenceRow> rows;
  /// Strictly decreasing residual across successive resolutions.
  bool monotone = false;
};

/// N of the isotropic-channel output at weight p on a fixed window, at each
/// requested resolution.
inline ConvergenceTable convergence_scan(const HybridStateSpec& spec, double p, std::span<const int> resolutions,
                                         double half_width, const TopologyOptions& opt = {}) {
  detail::require(!resolutions.empty(), "convergence scan needs at least one resolution");
  const DensityMatrix4 rho = apply_isotropic_noise(pure_state(spec), p);
  ConvergenceTable table;
  table.half_width = half_width;
  for (int res : resolutions) {
    const GridSpec grid{half_width, res};
    const auto analysis = analyze_topology(rho, spec, grid, opt);
    table.rows.push_back({res, analysis.result.n, analysis.result.residual});
  }
  table.monotone = table.rows.size() >= 2;
  for (std::size_t i = 1; i < table.rows.size(); ++i)
    if (!(table.rows[i].residual < table.rows[i - 1].residual)) table.monotone = false;
  return table;
}

}  // namespace qsky
