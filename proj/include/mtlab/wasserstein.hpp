#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <utility>
#include <vector>

#include "mtlab/core.hpp"
#include "mtlab/grid.hpp"
#include "mtlab/measure.hpp"

namespace mtlab {

namespace detail {

/// Integral over [0, len] of |u + (v - u) s/len|^p for u, v >= 0.
inline double integrate_linear_pow(double u, double v, double len, double p) {
  if (len <= 0.0) return 0.0;
  if (p == 1.0) return 0.5 * len * (u + v);
  if (p == 2.0) return len * (u * u + u * v + v * v) / 3.0;
  const double hi = std::max(u, v);
  if (hi == 0.0) return 0.0;
  if (std::abs(u - v) > 1e-3 * hi) {
    return len * (std::pow(u, p + 1.0) - std::pow(v, p + 1.0)) / ((p + 1.0) * (u - v));
  }
  // Nearly constant integrand: the closed form cancels, Gauss-Legendre does not.
  static constexpr std::array<double, 4> x{0.1834346424956498, 0.5255324099163290, 0.7966664774136267,
                                           0.9602898564975363};
  static constexpr std::array<double, 4> w{0.3626837833783620, 0.3137066458778873, 0.2223810344533745,
                                           0.1012285362903763};
  double acc = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    for (double sgn : {-1.0, 1.0}) {
      const double s = 0.5 * (1.0 + sgn * x[k]);
      acc += 0.5 * w[k] * std::pow(u + (v - u) * s, p);
    }
  }
  return len * acc;
}

/// Integral over an interval of |d|^p where d is affine with end values da, db.
inline double integrate_abs_affine_pow(double da, double db, double len, double p) {
  if (da * db < 0.0) {
    const double root = len * da / (da - db);
    return integrate_linear_pow(std::abs(da), 0.0, root, p) + integrate_linear_pow(0.0, std::abs(db), len - root, p);
  }
  return integrate_linear_pow(std::abs(da), std::abs(db), len, p);
}

}  // namespace detail

/// W_p between two 1D measures given by their quantile functions:
/// (integral over [0,1) of |F_mu - F_nu|^p)^{1/p}, integrated piece by piece
/// over the merged breakpoints.
inline double wp_1d(const QuantileFunction& mu, const QuantileFunction& nu, double p) {
  if (!(p >= 1.0)) throw RangeError("Wasserstein order must be >= 1");
  const auto& a = mu.pieces();
  const auto& b = nu.pieces();
  std::size_t ia = 0, ib = 0;
  double z = 0.0;
  CompensatedSum total;
  while (ia < a.size() && ib < b.size()) {
    const double z_next = std::min(a[ia].z_hi, b[ib].z_hi);
    if (z_next > z) {
      const double da = a[ia].at(z) - b[ib].at(z);
      const double db = a[ia].at(z_next) - b[ib].at(z_next);
      total += detail::integrate_abs_affine_pow(da, db, z_next - z, p);
    }
    z = z_next;
    if (a[ia].z_hi == z_next) ++ia;
    if (b[ib].z_hi == z_next) ++ib;
  }
  const double s = std::max(0.0, total.value());
  return p == 1.0 ? s : std::pow(s, 1.0 / p);
}

inline double wp_1d(const DiscreteMeasure<1>& mu, const DiscreteMeasure<1>& nu, double p) {
  return wp_1d(quantile(mu), quantile(nu), p);
}

namespace detail {

/// Exact min-cost transportation by the transportation (network) simplex on
/// the complete bipartite graph. The basis is a spanning tree of m + n - 1
/// cells, initialized by the north-west corner rule; entering cells are
/// chosen by most negative reduced cost.
class TransportSimplex {
 public:
  TransportSimplex(std::vector<double> supply, std::vector<double> demand, std::vector<double> cost)
      : m_(supply.size()), n_(demand.size()), supply_(std::move(supply)), demand_(std::move(demand)), cost_(std::move(cost)) {
    if (m_ == 0 || n_ == 0) throw RangeError("transport problem needs nonempty marginals");
    if (cost_.size() != m_ * n_) throw RangeError("cost matrix has the wrong size");
  }

  double solve() {
    north_west();
    double scale = 0.0;
    for (double c : cost_) scale = std::max(scale, std::abs(c));
    const double tol = 1e-12 * std::max(scale, std::numeric_limits<double>::min());
    const std::size_t cap = 1000 + 50 * (m_ + n_) * (m_ + n_);
    for (std::size_t iter = 0;; ++iter) {
      if (iter > cap) throw Error("transport simplex failed to converge");
      potentials();
      double best = -tol;
      std::size_t bi = 0, bj = 0;
      bool found = false;
      for (std::size_t i = 0; i < m_; ++i) {
        for (std::size_t j = 0; j < n_; ++j) {
          const double r = cost_[i * n_ + j] - u_[i] - v_[j];
          if (r < best) {
            best = r;
            bi = i;
            bj = j;
            found = true;
          }
        }
      }
      if (!found) break;
      pivot(bi, bj);
    }
    CompensatedSum total;
    for (const auto& c : cells_) total += cost_[c.i * n_ + c.j] * std::max(0.0, c.flow);
    return total.value();
  }

 private:
  struct Cell {
    std::size_t i;
    std::size_t j;
    double flow;
  };

  std::size_t row_node(std::size_t i) const { return i; }
  std::size_t col_node(std::size_t j) const { return m_ + j; }

  void add_cell(std::size_t i, std::size_t j, double flow) {
    cells_.push_back({i, j, flow});
    adj_[row_node(i)].push_back(cells_.size() - 1);
    adj_[col_node(j)].push_back(cells_.size() - 1);
  }

  void north_west() {
    adj_.assign(m_ + n_, {});
    cells_.clear();
    std::vector<double> s = supply_, d = demand_;
    std::size_t i = 0, j = 0;
    while (true) {
      const double x = std::min(s[i], d[j]);
      add_cell(i, j, x);
      s[i] -= x;
      d[j] -= x;
      if (i == m_ - 1 && j == n_ - 1) break;
      if (j == n_ - 1 || (i < m_ - 1 && s[i] <= d[j])) {
        ++i;
      } else {
        ++j;
      }
    }
  }

  std::size_t other_end(std::size_t cell, std::size_t node) const {
    const auto& c = cells_[cell];
    return node == row_node(c.i) ? col_node(c.j) : row_node(c.i);
  }

  void potentials() {
    u_.assign(m_, 0.0);
    v_.assign(n_, 0.0);
    std::vector<char> seen(m_ + n_, 0);
    std::deque<std::size_t> queue{row_node(0)};
    seen[row_node(0)] = 1;
    while (!queue.empty()) {
      const std::size_t node = queue.front();
      queue.pop_front();
      for (std::size_t cell : adj_[node]) {
        const std::size_t next = other_end(cell, node);
        if (seen[next]) continue;
        seen[next] = 1;
        const auto& c = cells_[cell];
        const double cij = cost_[c.i * n_ + c.j];
        if (next >= m_) {
          v_[c.j] = cij - u_[c.i];
        } else {
          u_[c.i] = cij - v_[c.j];
        }
        queue.push_back(next);
      }
    }
  }

  void pivot(std::size_t ei, std::size_t ej) {
    // Tree path from row ei to column ej.
    const std::size_t start = row_node(ei);
    const std::size_t goal = col_node(ej);
    std::vector<std::size_t> parent_cell(m_ + n_, SIZE_MAX);
    std::vector<char> seen(m_ + n_, 0);
    std::deque<std::size_t> queue{start};
    seen[start] = 1;
    while (!queue.empty() && !seen[goal]) {
      const std::size_t node = queue.front();
      queue.pop_front();
      for (std::size_t cell : adj_[node]) {
        const std::size_t next = other_end(cell, node);
        if (seen[next]) continue;
        seen[next] = 1;
        parent_cell[next] = cell;
        queue.push_back(next);
      }
    }
    if (!seen[goal]) throw Error("transport simplex basis is not a spanning tree");

    // Walk back from the column: signs alternate -, +, -, ... ending with '-'
    // on the edge at row ei.
    std::vector<std::size_t> path;
    for (std::size_t node = goal; node != start;) {
      const std::size_t cell = parent_cell[node];
      path.push_back(cell);
      node = other_end(cell, node);
    }
    double theta = std::numeric_limits<double>::infinity();
    std::size_t leaving = SIZE_MAX;
    for (std::size_t k = 0; k < path.size(); k += 2) {
      if (cells_[path[k]].flow < theta) {
        theta = cells_[path[k]].flow;
        leaving = path[k];
      }
    }
    theta = std::max(0.0, theta);
    for (std::size_t k = 0; k < path.size(); ++k) cells_[path[k]].flow += (k % 2 == 0) ? -theta : theta;

    // Replace the leaving cell by the entering one.
    auto drop = [&](std::size_t node, std::size_t cell) {
      auto& list = adj_[node];
      list.erase(std::find(list.begin(), list.end(), cell));
    };
    drop(row_node(cells_[leaving].i), leaving);
    drop(col_node(cells_[leaving].j), leaving);
    cells_[leaving] = {ei, ej, theta};
    adj_[row_node(ei)].push_back(leaving);
    adj_[col_node(ej)].push_back(leaving);
  }

  std::size_t m_, n_;
  std::vector<double> supply_, demand_, cost_;
  std::vector<Cell> cells_;
  std::vector<std::vector<std::size_t>> adj_;
  std::vector<double> u_, v_;
};

}  // namespace detail

/// Largest combined support wp_discrete accepts.
inline constexpr std::size_t kMaxExactSupport = 5000;

/// Exact W_p between two grid measures by solving the optimal transport
/// linear program on their supports (costs |x - y|^p, Euclidean).
template <int D>
double wp_discrete(const DiscreteMeasure<D>& mu, const DiscreteMeasure<D>& nu, double p) {
  if (!(p >= 1.0)) throw RangeError("Wasserstein order must be >= 1");
  if (mu.support_size() + nu.support_size() > kMaxExactSupport) {
    throw ScaleError("wp_discrete: combined support exceeds " + std::to_string(kMaxExactSupport) +
                     " points; use wp_1d in dimension 1");
  }
  std::vector<Point<D>> xs, ys;
  std::vector<double> a, b;
  for (const auto& [j, w] : mu.weights()) {
    xs.push_back(mu.grid().node(j));
    a.push_back(w);
  }
  for (const auto& [j, w] : nu.weights()) {
    ys.push_back(nu.grid().node(j));
    b.push_back(w);
  }
  std::vector<double> cost(xs.size() * ys.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t j = 0; j < ys.size(); ++j) {
      const double r = distance<D>(xs[i], ys[j]);
      cost[i * ys.size() + j] = p == 1.0 ? r : std::pow(r, p);
    }
  }
  const double c = detail::TransportSimplex(std::move(a), std::move(b), std::move(cost)).solve();
  return p == 1.0 ? std::max(0.0, c) : std::pow(std::max(0.0, c), 1.0 / p);
}

/// Piecewise-constant function on R: value v[k] on [x[k], x[k+1]), zero
/// outside [x.front(), x.back()). Values may be negative (differences).
struct PiecewiseConstant {
  std::vector<double> x;
  std::vector<double> v;

  [[nodiscard]] bool empty() const { return v.empty(); }

  [[nodiscard]] double operator()(double at) const {
    if (v.empty() || at < x.front() || at >= x.back()) return 0.0;
    const auto it = std::upper_bound(x.begin(), x.end(), at);
    return v[static_cast<std::size_t>(it - x.begin()) - 1];
  }

  /// Builds the canonical form from (lo, hi, value) pieces; overlaps add up.
  static PiecewiseConstant from_pieces(const std::vector<std::array<double, 3>>& pieces) {
    PiecewiseConstant f;
    for (const auto& pc : pieces) {
      if (pc[1] > pc[0]) {
        f.x.push_back(pc[0]);
        f.x.push_back(pc[1]);
      }
    }
    std::sort(f.x.begin(), f.x.end());
    f.x.erase(std::unique(f.x.begin(), f.x.end()), f.x.end());
    if (f.x.size() < 2) return {};
    f.v.assign(f.x.size() - 1, 0.0);
    for (const auto& pc : pieces) {
      if (!(pc[1] > pc[0])) continue;
      auto lo = std::lower_bound(f.x.begin(), f.x.end(), pc[0]) - f.x.begin();
      auto hi = std::lower_bound(f.x.begin(), f.x.end(), pc[1]) - f.x.begin();
      for (auto k = lo; k < hi; ++k) f.v[static_cast<std::size_t>(k)] += pc[2];
    }
    return f;
  }

  static PiecewiseConstant from_measure(const AnalyticMeasure<1>& m) {
    if (!m.atoms.empty()) throw RangeError("measure with atoms has no density");
    std::vector<std::array<double, 3>> pieces;
    for (const auto& b : m.boxes) pieces.push_back({b.lo[0], b.hi[0], b.density});
    return from_pieces(pieces);
  }

  /// Density rho_j / dx on each cell of a grid measure.
  static PiecewiseConstant from_measure(const DiscreteMeasure<1>& mu) {
    std::vector<std::array<double, 3>> pieces;
    const auto& g = mu.grid();
    for (const auto& [j, w] : mu.weights()) pieces.push_back({g.cell_lower(0, j[0]), g.cell_upper(0, j[0]), w / g.dx(0)});
    return from_pieces(pieces);
  }

  [[nodiscard]] AnalyticMeasure<1> to_measure() const {
    AnalyticMeasure<1> m;
    for (std::size_t k = 0; k < v.size(); ++k) {
      if (v[k] < 0.0) throw RangeError("negative density cannot be a measure");
      add_interval(m, x[k], x[k + 1], v[k]);
    }
    return m;
  }

  [[nodiscard]] double integral() const {
    CompensatedSum s;
    for (std::size_t k = 0; k < v.size(); ++k) s += v[k] * (x[k + 1] - x[k]);
    return s.value();
  }
};

/// f - g on the merged breakpoints.
inline PiecewiseConstant difference(const PiecewiseConstant& f, const PiecewiseConstant& g) {
  std::vector<std::array<double, 3>> pieces;
  for (std::size_t k = 0; k < f.v.size(); ++k) pieces.push_back({f.x[k], f.x[k + 1], f.v[k]});
  for (std::size_t k = 0; k < g.v.size(); ++k) pieces.push_back({g.x[k], g.x[k + 1], -g.v[k]});
  return PiecewiseConstant::from_pieces(pieces);
}

inline double l1_norm(const PiecewiseConstant& f) {
  CompensatedSum s;
  for (std::size_t k = 0; k < f.v.size(); ++k) s += std::abs(f.v[k]) * (f.x[k + 1] - f.x[k]);
  return s.value();
}

/// Total variation: sum of absolute jumps, including the drops to zero at
/// both ends of the support.
inline double bv_seminorm(const PiecewiseConstant& f) {
  if (f.v.empty()) return 0.0;
  CompensatedSum s;
  s += std::abs(f.v.front());
  for (std::size_t k = 1; k < f.v.size(); ++k) s += std::abs(f.v[k] - f.v[k - 1]);
  s += std::abs(f.v.back());
  return s.value();
}

/// L1 distance between the cell density rho_j/dx of a grid measure and an
/// absolutely continuous closed-form measure.
inline double l1_distance(const DiscreteMeasure<1>& mu, const AnalyticMeasure<1>& nu) {
  if (!nu.atoms.empty()) throw RangeError("l1_distance: reference measure has atoms");
  return l1_norm(difference(PiecewiseConstant::from_measure(mu), PiecewiseConstant::from_measure(nu)));
}

struct InterpolationCheck {
  double l1 = 0.0;
  double bv = 0.0;
  double w1 = 0.0;
  double ratio = 0.0;  ///< l1 / sqrt(bv * w1); 0 when f == g
  bool within = true;  ///< ratio <= c
};

/// Ratio ||f - g||_1 / (|f - g|_BV^{1/2} W_1(f, g)^{1/2}) for two unit-mass
/// nonnegative piecewise-constant densities.
inline InterpolationCheck interpolation_check(const PiecewiseConstant& f, const PiecewiseConstant& g, double c) {
  auto check_density = [](const PiecewiseConstant& h) {
    for (double val : h.v) {
      if (val < 0.0) throw RangeError("interpolation_check: densities must be nonnegative");
    }
    if (std::abs(h.integral() - 1.0) > 1e-9) throw RangeError("interpolation_check: densities must have unit mass");
  };
  check_density(f);
  check_density(g);
  InterpolationCheck r;
  const PiecewiseConstant d = difference(f, g);
  r.l1 = l1_norm(d);
  r.bv = bv_seminorm(d);
  if (r.l1 == 0.0) return r;
  r.w1 = wp_1d(quantile(f.to_measure()), quantile(g.to_measure()), 1.0);
  if (r.bv == 0.0 || r.w1 == 0.0) {
    // Unreachable for distinct piecewise-constant densities.
    r.ratio = std::numeric_limits<double>::infinity();
  } else {
    r.ratio = r.l1 / std::sqrt(r.bv * r.w1);
  }
  r.within = r.ratio <= c;
  return r;
}

}  // namespace mtlab
