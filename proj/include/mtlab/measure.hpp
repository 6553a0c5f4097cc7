#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <utility>
#include <vector>

#include "mtlab/core.hpp"
#include "mtlab/grid.hpp"

namespace mtlab {

/// Closed-form probability measure: finitely many Dirac atoms plus uniform
/// densities on axis-aligned boxes. In 1D the boxes are intervals [lo, hi).
template <int D>
struct AnalyticMeasure {
  struct Atom {
    Point<D> at;
    double mass;
  };
  struct Box {
    Point<D> lo;
    Point<D> hi;
    double density;
  };

  std::vector<Atom> atoms;
  std::vector<Box> boxes;

  static AnalyticMeasure dirac(Point<D> at, double mass = 1.0) {
    AnalyticMeasure m;
    m.atoms.push_back({at, mass});
    return m;
  }

  AnalyticMeasure& add_atom(Point<D> at, double mass) {
    if (mass > 0.0) atoms.push_back({at, mass});
    return *this;
  }

  AnalyticMeasure& add_box(Point<D> lo, Point<D> hi, double density) {
    bool empty = false;
    for (int i = 0; i < D; ++i) empty = empty || !(hi[i] > lo[i]);
    if (!empty && density != 0.0) boxes.push_back({lo, hi, density});
    return *this;
  }

  [[nodiscard]] bool absolutely_continuous() const { return atoms.empty(); }

  [[nodiscard]] double mass() const {
    CompensatedSum s;
    for (const auto& a : atoms) s += a.mass;
    for (const auto& b : boxes) {
      double vol = b.density;
      for (int i = 0; i < D; ++i) vol *= b.hi[i] - b.lo[i];
      s += vol;
    }
    return s.value();
  }
};

/// 1D convenience: an interval with constant density.
inline AnalyticMeasure<1>& add_interval(AnalyticMeasure<1>& m, double lo, double hi, double density) {
  return m.add_box({lo}, {hi}, density);
}

/// Nonnegative weights on grid nodes, stored sparsely in lexicographic order.
/// Zero weights are never stored.
template <int D>
class DiscreteMeasure {
 public:
  using Weights = std::map<Index<D>, double>;

  explicit DiscreteMeasure(CartesianGrid<D> grid) : grid_(grid) {}

  DiscreteMeasure(CartesianGrid<D> grid, Weights weights) : grid_(grid), weights_(std::move(weights)) {
    for (auto it = weights_.begin(); it != weights_.end();) {
      if (!(it->second >= 0.0)) throw RangeError("measure weights must be nonnegative");
      if (it->second == 0.0) {
        it = weights_.erase(it);
      } else {
        ++it;
      }
    }
  }

  static DiscreteMeasure dirac(CartesianGrid<D> grid, Index<D> at) { return DiscreteMeasure(grid, Weights{{at, 1.0}}); }

  [[nodiscard]] const CartesianGrid<D>& grid() const { return grid_; }
  [[nodiscard]] const Weights& weights() const { return weights_; }
  [[nodiscard]] std::size_t support_size() const { return weights_.size(); }
  [[nodiscard]] bool empty() const { return weights_.empty(); }

  [[nodiscard]] double at(const Index<D>& j) const {
    auto it = weights_.find(j);
    return it == weights_.end() ? 0.0 : it->second;
  }

  [[nodiscard]] double mass() const {
    CompensatedSum s;
    for (const auto& [j, w] : weights_) s += w;
    return s.value();
  }

  /// Tolerance on |mass - 1| admitted for a measure of this support size.
  [[nodiscard]] double mass_tolerance() const {
    return 10.0 * std::numeric_limits<double>::epsilon() * static_cast<double>(std::max<std::size_t>(1, weights_.size()));
  }

  /// Smallest and largest index along each axis.
  [[nodiscard]] std::pair<Index<D>, Index<D>> bounding_box() const {
    if (weights_.empty()) throw RangeError("empty measure has no bounding box");
    Index<D> lo = weights_.begin()->first;
    Index<D> hi = lo;
    for (const auto& [j, w] : weights_) {
      for (int i = 0; i < D; ++i) {
        lo[i] = std::min(lo[i], j[i]);
        hi[i] = std::max(hi[i], j[i]);
      }
    }
    return {lo, hi};
  }

 private:
  CartesianGrid<D> grid_;
  Weights weights_;
};

/// Exact cell masses rho_J = rho_ini(C_J) of an analytic measure.
template <int D>
DiscreteMeasure<D> project_initial(const AnalyticMeasure<D>& ini, const CartesianGrid<D>& grid) {
  typename DiscreteMeasure<D>::Weights w;
  for (const auto& a : ini.atoms) w[grid.cell_of(a.at)] += a.mass;

  for (const auto& box : ini.boxes) {
    // Per-axis list of (cell, overlap length).
    std::array<std::vector<std::pair<std::int64_t, double>>, D> overlaps;
    for (int i = 0; i < D; ++i) {
      const std::int64_t first = grid.cell_of(i, box.lo[i]);
      const std::int64_t last = grid.cell_of(i, box.hi[i]);
      for (std::int64_t j = first; j <= last; ++j) {
        const double len = std::min(box.hi[i], grid.cell_upper(i, j)) - std::max(box.lo[i], grid.cell_lower(i, j));
        if (len > 0.0) overlaps[i].emplace_back(j, len);
      }
    }
    Index<D> idx{};
    auto recurse = [&](auto&& self, int axis, double vol) -> void {
      if (axis == D) {
        w[idx] += box.density * vol;
        return;
      }
      for (const auto& [j, len] : overlaps[axis]) {
        idx[axis] = j;
        self(self, axis + 1, vol * len);
      }
    };
    recurse(recurse, 0, 1.0);
  }
  return DiscreteMeasure<D>(grid, std::move(w));
}

/// p-th moment sum_J |x_J|^p rho_J (Euclidean norm, 0^0 = 1).
template <int D>
double moment(const DiscreteMeasure<D>& mu, double p) {
  if (p < 0.0) throw RangeError("moment order must be nonnegative");
  CompensatedSum s;
  for (const auto& [j, w] : mu.weights()) {
    const double r = norm<D>(mu.grid().node(j));
    s += (p == 0.0 ? 1.0 : std::pow(r, p)) * w;
  }
  return s.value();
}

/// Right-continuous nondecreasing function on [0,1), affine on each interval
/// [z_k, z_{k+1}): F(z) = value_k + slope_k (z - z_k).
class QuantileFunction {
 public:
  struct Piece {
    double z_lo;
    double z_hi;
    double value;
    double slope;
    [[nodiscard]] double at(double z) const { return value + slope * (z - z_lo); }
    [[nodiscard]] double left() const { return value; }
    [[nodiscard]] double right() const { return value + slope * (z_hi - z_lo); }
  };

  QuantileFunction() = default;
  explicit QuantileFunction(std::vector<Piece> pieces) : pieces_(std::move(pieces)) {
    if (pieces_.empty()) throw RangeError("quantile function needs at least one piece");
    if (pieces_.front().z_lo != 0.0 || pieces_.back().z_hi != 1.0) throw RangeError("quantile pieces must cover [0,1)");
    for (std::size_t k = 0; k < pieces_.size(); ++k) {
      if (!(pieces_[k].z_hi > pieces_[k].z_lo)) throw RangeError("quantile breakpoints must increase");
      if (k > 0 && pieces_[k].z_lo != pieces_[k - 1].z_hi) throw RangeError("quantile pieces must be contiguous");
    }
  }

  static QuantileFunction constant(double v) { return QuantileFunction({{0.0, 1.0, v, 0.0}}); }

  [[nodiscard]] const std::vector<Piece>& pieces() const { return pieces_; }

  [[nodiscard]] std::vector<double> breakpoints() const {
    std::vector<double> z;
    z.reserve(pieces_.size() + 1);
    for (const auto& p : pieces_) z.push_back(p.z_lo);
    z.push_back(1.0);
    return z;
  }

  [[nodiscard]] double operator()(double z) const {
    auto it = std::upper_bound(pieces_.begin(), pieces_.end(), z, [](double v, const Piece& p) { return v < p.z_hi; });
    if (it == pieces_.end()) --it;
    return it->at(z);
  }

  [[nodiscard]] bool is_step_function() const {
    return std::all_of(pieces_.begin(), pieces_.end(), [](const Piece& p) { return p.slope == 0.0; });
  }

 private:
  std::vector<Piece> pieces_;
};

namespace detail {

/// Assembles contiguous pieces from (mass, value, slope) runs. Breakpoints are
/// compensated partial sums of the masses; the last one is pinned to 1.
class QuantileBuilder {
 public:
  void push(double mass, double value, double slope) {
    if (!(mass > 0.0)) return;
    runs_.push_back({mass, value, slope});
  }

  QuantileFunction build() const {
    if (runs_.empty()) throw RangeError("quantile of an empty measure");
    CompensatedSum cum;
    std::vector<QuantileFunction::Piece> pieces;
    double z_lo = 0.0;
    for (std::size_t k = 0; k < runs_.size(); ++k) {
      cum += runs_[k].mass;
      const double z_hi = (k + 1 == runs_.size()) ? 1.0 : std::min(cum.value(), 1.0);
      if (z_hi > z_lo) {
        pieces.push_back({z_lo, z_hi, runs_[k].value, runs_[k].slope});
        z_lo = z_hi;
      }
    }
    if (pieces.empty()) pieces.push_back({0.0, 1.0, runs_.back().value, runs_.back().slope});
    return QuantileFunction(std::move(pieces));
  }

 private:
  struct Run {
    double mass;
    double value;
    double slope;
  };
  std::vector<Run> runs_;
};

}  // namespace detail

/// Generalized inverse of the cumulative distribution of a 1D grid measure.
inline QuantileFunction quantile(const DiscreteMeasure<1>& mu) {
  detail::QuantileBuilder b;
  for (const auto& [j, w] : mu.weights()) b.push(w, mu.grid().node(j)[0], 0.0);
  return b.build();
}

template <int D>
QuantileFunction quantile(const DiscreteMeasure<D>&) {
  throw DimensionError("quantile functions are defined in dimension 1 only");
}

/// Generalized inverse of a 1D analytic measure: atoms give constant pieces,
/// densities give affine pieces of slope 1/density.
inline QuantileFunction quantile(const AnalyticMeasure<1>& m) {
  // Elementary events sorted by position: atoms and maximal intervals of
  // constant total density.
  std::vector<double> cuts;
  for (const auto& b : m.boxes) {
    cuts.push_back(b.lo[0]);
    cuts.push_back(b.hi[0]);
  }
  for (const auto& a : m.atoms) cuts.push_back(a.at[0]);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  struct Event {
    double x;
    int order;  // atoms at x come before the interval starting at x
    double mass;
    double density;
  };
  std::vector<Event> events;
  for (const auto& a : m.atoms) events.push_back({a.at[0], 0, a.mass, 0.0});
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    double dens = 0.0;
    for (const auto& b : m.boxes) {
      if (b.lo[0] <= cuts[k] && b.hi[0] >= cuts[k + 1]) dens += b.density;
    }
    if (dens > 0.0) events.push_back({cuts[k], 1, dens * (cuts[k + 1] - cuts[k]), dens});
    if (dens < 0.0) throw RangeError("analytic measure has negative density");
  }
  std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
    return a.x < b.x || (a.x == b.x && a.order < b.order);
  });
  detail::QuantileBuilder builder;
  for (const auto& e : events) builder.push(e.mass, e.x, e.order == 0 ? 0.0 : 1.0 / e.density);
  return builder.build();
}

}  // namespace mtlab
