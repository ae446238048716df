#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qsky/error.hpp"

namespace qsky {

/// Square, uniform sampling of the transverse plane, centred on the optical axis.
/// Lengths share the unit of the beam waist.
struct GridSpec {
  double half_width = 5.0;
  int samples_per_axis = 256;
  /// Largest allowed mode envelope on the window edge, relative to the mode peak.
  /// Non-positive disables the check.
  double envelope_cutoff = 1e-6;

  double spacing() const { return 2.0 * half_width / (samples_per_axis - 1); }
  double coordinate(int i) const { return -half_width + i * spacing(); }
  std::size_t point_count() const {
    return static_cast<std::size_t>(samples_per_axis) * static_cast<std::size_t>(samples_per_axis);
  }

  void validate() const {
    detail::require(std::isfinite(half_width) && half_width > 0.0, "grid half_width must be positive and finite");
    detail::require(samples_per_axis >= 16, "grid samples_per_axis must be at least 16");
  }

  bool same_sampling(const GridSpec& other) const {
    return half_width == other.half_width && samples_per_axis == other.samples_per_axis;
  }
};

/// Row-major scalar field over a square grid; row index is y, column index is x.
template <typename T>
class Field2D {
 public:
  Field2D() = default;
  explicit Field2D(int n, T init = T{}) : n_(n), data_(static_cast<std::size_t>(n) * n, init) {}

  int size() const { return n_; }
  T& operator()(int ix, int iy) { return data_[index(ix, iy)]; }
  const T& operator()(int ix, int iy) const { return data_[index(ix, iy)]; }

  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }

  bool operator==(const Field2D&) const = default;

 private:
  std::size_t index(int ix, int iy) const { return static_cast<std::size_t>(iy) * n_ + ix; }

  int n_ = 0;
  std::vector<T> data_;
};

/// 1 marks an excluded grid point.
using Mask = Field2D<std::uint8_t>;

inline std::size_t count_masked(const Mask& mask) {
  std::size_t count = 0;
  for (auto m : mask.values()) count += (m != 0);
  return count;
}

struct GridPoint {
  int ix = 0;
  int iy = 0;
};

}  // namespace qsky
