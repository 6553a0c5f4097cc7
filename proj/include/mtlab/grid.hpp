#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>

#include "mtlab/core.hpp"

namespace mtlab {

// The cast keeps D out of deduction: functions taking an Index<D> or Point<D>
// get D from their other arguments or from an explicit template argument.

/// Multi-index J in Z^D. Lexicographic comparison fixes every reduction order.
template <int D>
using Index = std::array<std::int64_t, static_cast<std::size_t>(D)>;

template <int D>
using Point = std::array<double, static_cast<std::size_t>(D)>;

template <int D>
Index<D> shifted(Index<D> j, int axis, std::int64_t by) {
  j[axis] += by;
  return j;
}

template <int D>
double norm(const Point<D>& v) {
  double s = 0.0;
  for (double c : v) s += c * c;
  return std::sqrt(s);
}

template <int D>
double distance(const Point<D>& x, const Point<D>& y) {
  double s = 0.0;
  for (int i = 0; i < D; ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
  return std::sqrt(s);
}

/// Uniform Cartesian grid with per-axis cell width and a time step.
///
/// Node J sits at (J_1 dx_1, ..., J_D dx_D). Its cell is the half-open box
/// [(J_i - 1/2) dx_i, (J_i + 1/2) dx_i) on every axis, so a point on a shared
/// face belongs to the cell above it.
template <int D>
class CartesianGrid {
 public:
  static_assert(D >= 1, "grid dimension must be positive");

  CartesianGrid(Point<D> dx, double dt) : dx_(dx), dt_(dt) {
    for (double h : dx_) {
      if (!(h > 0.0)) throw RangeError("cell width must be positive");
      if (h > 1.0) throw RangeError("cell width must not exceed 1");
    }
    if (!(dt_ > 0.0)) throw RangeError("time step must be positive");
  }

  /// Isotropic grid.
  CartesianGrid(double dx, double dt) : CartesianGrid(filled(dx), dt) {}

  [[nodiscard]] const Point<D>& dx() const { return dx_; }
  [[nodiscard]] double dx(int axis) const { return dx_[axis]; }
  [[nodiscard]] double dt() const { return dt_; }
  [[nodiscard]] double max_dx() const { return *std::max_element(dx_.begin(), dx_.end()); }
  [[nodiscard]] double ratio(int axis) const { return dt_ / dx_[axis]; }
  [[nodiscard]] double time(std::int64_t n) const { return static_cast<double>(n) * dt_; }

  [[nodiscard]] Point<D> node(const Index<D>& j) const {
    Point<D> x{};
    for (int i = 0; i < D; ++i) x[i] = static_cast<double>(j[i]) * dx_[i];
    return x;
  }

  [[nodiscard]] double cell_lower(int axis, std::int64_t j) const {
    return (static_cast<double>(j) - 0.5) * dx_[axis];
  }
  [[nodiscard]] double cell_upper(int axis, std::int64_t j) const {
    return (static_cast<double>(j) + 0.5) * dx_[axis];
  }

  /// Cell index along one axis. Coordinates within 1e-9 cells of a face are
  /// snapped onto it so that exact face positions survive rounding in x/dx.
  [[nodiscard]] std::int64_t cell_of(int axis, double x) const {
    const double r = x / dx_[axis] + 0.5;
    const double k = std::round(r);
    if (std::abs(r - k) <= 1e-9 * std::max(1.0, std::abs(r))) return static_cast<std::int64_t>(k);
    return static_cast<std::int64_t>(std::floor(r));
  }

  [[nodiscard]] Index<D> cell_of(const Point<D>& x) const {
    Index<D> j{};
    for (int i = 0; i < D; ++i) j[i] = cell_of(i, x[i]);
    return j;
  }

  bool operator==(const CartesianGrid&) const = default;

 private:
  static Point<D> filled(double v) {
    Point<D> p{};
    p.fill(v);
    return p;
  }

  Point<D> dx_;
  double dt_;
};

}  // namespace mtlab
