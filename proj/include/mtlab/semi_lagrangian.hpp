#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mtlab/core.hpp"
#include "mtlab/grid.hpp"
#include "mtlab/stochastic.hpp"
#include "mtlab/velocity.hpp"

// Forward semi-Lagrangian scheme on conformal triangular meshes in the plane:
// every node pushes its mass to x_i + dt a_i and splits it between the
// vertices of the triangle it lands in, in proportion to barycentric
// coordinates.

namespace mtlab {

using Point2 = Point<2>;
using Triangle = std::array<std::int32_t, 3>;

/// Signed area of (a, b, c); positive for counter-clockwise order.
inline double signed_area(const Point2& a, const Point2& b, const Point2& c) {
  return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]));
}

/// Barycentric coordinates of xi in triangle (x, y, z): sub-triangle area
/// ratios, clamped at 0 and renormalized to sum to 1. Throws when xi lies
/// outside the closed triangle by more than a rounding margin.
inline std::array<double, 3> barycentric(const std::array<Point2, 3>& tri, const Point2& xi) {
  const double area = signed_area(tri[0], tri[1], tri[2]);
  if (area == 0.0) throw MeshError("degenerate triangle");
  std::array<double, 3> lam{signed_area(xi, tri[1], tri[2]) / area, signed_area(tri[0], xi, tri[2]) / area,
                            signed_area(tri[0], tri[1], xi) / area};
  constexpr double tol = 1e-12;
  double sum = 0.0;
  for (double& l : lam) {
    if (l < -tol) throw RangeError("point lies outside the triangle");
    l = std::max(l, 0.0);
    sum += l;
  }
  for (double& l : lam) l /= sum;
  return lam;
}

/// Triangle mesh with node stars and the minimal height hbar.
class TriMesh {
 public:
  TriMesh(std::vector<Point2> nodes, std::vector<Triangle> triangles, bool check_conformity = true)
      : nodes_(std::move(nodes)), triangles_(std::move(triangles)) {
    if (nodes_.empty() || triangles_.empty()) throw MeshError("mesh needs nodes and triangles");
    star_.assign(nodes_.size(), {});
    hbar_ = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < triangles_.size(); ++k) {
      auto& t = triangles_[k];
      for (auto v : t) {
        if (v < 0 || static_cast<std::size_t>(v) >= nodes_.size()) throw MeshError("triangle references a missing node");
      }
      if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) throw MeshError("triangle repeats a vertex");
      double area = signed_area(nodes_[t[0]], nodes_[t[1]], nodes_[t[2]]);
      if (area == 0.0) throw MeshError("degenerate triangle " + std::to_string(k));
      if (area < 0.0) {
        std::swap(t[1], t[2]);
        area = -area;
      }
      double longest = 0.0;
      for (int e = 0; e < 3; ++e) longest = std::max(longest, distance<2>(nodes_[t[e]], nodes_[t[(e + 1) % 3]]));
      hbar_ = std::min(hbar_, 2.0 * area / longest);
      longest_edge_ = std::max(longest_edge_, longest);
      for (auto v : t) star_[static_cast<std::size_t>(v)].push_back(static_cast<std::int32_t>(k));
    }
    if (!(hbar_ > 0.0)) throw MeshError("mesh has zero minimal height");
    if (check_conformity) check_conformal();
  }

  /// Square [x0, x0 + nx h] x [y0, y0 + ny h] cut into nx*ny squares, each
  /// split along its lower-left to upper-right diagonal.
  static TriMesh structured(double x0, double y0, double h, int nx, int ny) {
    if (nx < 1 || ny < 1 || !(h > 0.0)) throw MeshError("structured mesh needs positive size");
    std::vector<Point2> nodes;
    nodes.reserve(static_cast<std::size_t>((nx + 1) * (ny + 1)));
    for (int r = 0; r <= ny; ++r) {
      for (int c = 0; c <= nx; ++c) nodes.push_back({x0 + c * h, y0 + r * h});
    }
    auto id = [nx](int c, int r) { return static_cast<std::int32_t>(r * (nx + 1) + c); };
    std::vector<Triangle> tris;
    tris.reserve(static_cast<std::size_t>(2 * nx * ny));
    for (int r = 0; r < ny; ++r) {
      for (int c = 0; c < nx; ++c) {
        tris.push_back({id(c, r), id(c + 1, r), id(c + 1, r + 1)});
        tris.push_back({id(c, r), id(c + 1, r + 1), id(c, r + 1)});
      }
    }
    return TriMesh(std::move(nodes), std::move(tris), false);
  }

  /// Reads `v x y` lines followed by `t i j k` lines (1-based vertex ids).
  /// Blank lines and lines starting with '#' are ignored.
  static TriMesh read(std::istream& is) {
    std::vector<Point2> nodes;
    std::vector<Triangle> tris;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      std::istringstream ls(line);
      std::string tag;
      if (!(ls >> tag) || tag[0] == '#') continue;
      if (tag == "v") {
        Point2 p{};
        if (!(ls >> p[0] >> p[1])) throw MeshError("mesh line " + std::to_string(lineno) + ": expected 'v x y'");
        if (!tris.empty()) throw MeshError("mesh line " + std::to_string(lineno) + ": vertex after triangles");
        nodes.push_back(p);
      } else if (tag == "t") {
        std::int64_t a = 0, b = 0, c = 0;
        if (!(ls >> a >> b >> c)) throw MeshError("mesh line " + std::to_string(lineno) + ": expected 't i j k'");
        tris.push_back({static_cast<std::int32_t>(a - 1), static_cast<std::int32_t>(b - 1), static_cast<std::int32_t>(c - 1)});
      } else {
        throw MeshError("mesh line " + std::to_string(lineno) + ": unknown record '" + tag + "'");
      }
    }
    return TriMesh(std::move(nodes), std::move(tris));
  }

  [[nodiscard]] const std::vector<Point2>& nodes() const { return nodes_; }
  [[nodiscard]] const std::vector<Triangle>& triangles() const { return triangles_; }
  [[nodiscard]] const std::vector<std::int32_t>& star(std::size_t node) const { return star_[node]; }
  [[nodiscard]] double hbar() const { return hbar_; }
  [[nodiscard]] double longest_edge() const { return longest_edge_; }
  [[nodiscard]] std::size_t node_count() const { return nodes_.size(); }

  [[nodiscard]] std::array<Point2, 3> corners(std::size_t tri) const {
    const auto& t = triangles_[tri];
    return {nodes_[t[0]], nodes_[t[1]], nodes_[t[2]]};
  }

  [[nodiscard]] bool contains(std::size_t tri, const Point2& p) const {
    const auto c = corners(tri);
    const double area = signed_area(c[0], c[1], c[2]);
    const double tol = -1e-12 * area;
    return signed_area(p, c[1], c[2]) >= tol && signed_area(c[0], p, c[2]) >= tol && signed_area(c[0], c[1], p) >= tol;
  }

  /// Triangle owning point p, searched in the star of `node` first. Among
  /// triangles whose closure holds p the lowest index wins, which makes the
  /// cells a disjoint partition.
  [[nodiscard]] std::size_t locate(std::size_t node, const Point2& p) const {
    for (auto k : star_[node]) {
      if (contains(static_cast<std::size_t>(k), p)) return static_cast<std::size_t>(k);
    }
    for (std::size_t k = 0; k < triangles_.size(); ++k) {
      if (contains(k, p)) return k;
    }
    throw MeshError("displaced point (" + std::to_string(p[0]) + ", " + std::to_string(p[1]) + ") lies outside the mesh");
  }

  /// Nearest node to p (ties: lowest index).
  [[nodiscard]] std::size_t nearest_node(const Point2& p) const {
    std::size_t best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const double d = distance<2>(nodes_[i], p);
      if (d < bd) {
        bd = d;
        best = i;
      }
    }
    return best;
  }

 private:
  // No vertex may sit in the relative interior of an edge it does not end.
  void check_conformal() const {
    const double cell = std::max(longest_edge_, 1e-300);
    auto key = [cell](double x, double y) {
      return std::make_pair(static_cast<std::int64_t>(std::floor(x / cell)), static_cast<std::int64_t>(std::floor(y / cell)));
    };
    std::map<std::pair<std::int64_t, std::int64_t>, std::vector<std::int32_t>> buckets;
    for (std::size_t i = 0; i < nodes_.size(); ++i) buckets[key(nodes_[i][0], nodes_[i][1])].push_back(static_cast<std::int32_t>(i));
    for (const auto& t : triangles_) {
      for (int e = 0; e < 3; ++e) {
        const auto a = t[e], b = t[(e + 1) % 3];
        const Point2& pa = nodes_[a];
        const Point2& pb = nodes_[b];
        const double len = distance<2>(pa, pb);
        const auto k = key(pa[0], pa[1]);
        for (std::int64_t dx = -1; dx <= 1; ++dx) {
          for (std::int64_t dy = -1; dy <= 1; ++dy) {
            auto it = buckets.find({k.first + dx, k.second + dy});
            if (it == buckets.end()) continue;
            for (auto v : it->second) {
              if (v == a || v == b) continue;
              const Point2& pv = nodes_[v];
              const double cross = 2.0 * signed_area(pa, pb, pv);
              if (std::abs(cross) > 1e-12 * len * len) continue;
              const double s = ((pv[0] - pa[0]) * (pb[0] - pa[0]) + (pv[1] - pa[1]) * (pb[1] - pa[1])) / (len * len);
              if (s > 1e-12 && s < 1.0 - 1e-12) throw MeshError("mesh is not conformal: vertex " + std::to_string(v + 1) + " lies on an edge");
            }
          }
        }
      }
    }
  }

  std::vector<Point2> nodes_;
  std::vector<Triangle> triangles_;
  std::vector<std::vector<std::int32_t>> star_;
  double hbar_ = 0.0;
  double longest_edge_ = 0.0;
};

/// Probability weights on mesh nodes (sparse, ascending node id).
struct NodeMeasure {
  const TriMesh* mesh = nullptr;
  std::map<std::int64_t, double> weights;

  [[nodiscard]] double mass() const {
    CompensatedSum s;
    for (const auto& [i, w] : weights) s += w;
    return s.value();
  }
  [[nodiscard]] double at(std::int64_t i) const {
    auto it = weights.find(i);
    return it == weights.end() ? 0.0 : it->second;
  }
};

inline NodeMeasure node_dirac(const TriMesh& mesh, std::size_t node) {
  NodeMeasure m{&mesh, {}};
  m.weights[static_cast<std::int64_t>(node)] = 1.0;
  return m;
}

/// Node-indexed transition kernel; each row holds the (at most three) vertices
/// of the triangle the displaced node lands in.
struct SlKernel {
  std::int64_t n = 0;
  std::map<std::int64_t, std::vector<std::pair<std::int64_t, double>>> rows;
  /// Largest sum over j != i of lambda_{i,j} among the rows.
  double max_off_diagonal = 0.0;

  [[nodiscard]] const std::vector<std::pair<std::int64_t, double>>& row(std::int64_t i) const {
    auto it = rows.find(i);
    if (it == rows.end()) throw RangeError("semi-Lagrangian kernel has no row for the requested node");
    return it->second;
  }
};

struct SlCfl {
  double lhs = 0.0;  ///< a_inf dt
  double bound = 0.0;  ///< hbar
  bool satisfied = true;
};

inline SlCfl check_sl_cfl(const TriMesh& mesh, const VelocityField<2>& field, double dt) {
  SlCfl r{field.a_inf * dt, mesh.hbar(), true};
  r.satisfied = r.lhs <= r.bound;
  return r;
}

/// Transition rows of step n for the given nodes.
template <class Support>
SlKernel sl_kernel(const TriMesh& mesh, const VelocityField<2>& field, double dt, std::int64_t n, const Support& nodes) {
  const SlCfl cfl = check_sl_cfl(mesh, field, dt);
  if (!cfl.satisfied) throw CflError(CflReport{cfl.lhs, cfl.bound, false});
  SlKernel k;
  k.n = n;
  const double t0 = static_cast<double>(n) * dt;
  const double t1 = static_cast<double>(n + 1) * dt;
  for (const auto& entry : nodes) {
    const std::int64_t i = entry;
    const Point2& xi = mesh.nodes()[static_cast<std::size_t>(i)];
    const Point2 a = time_average(field, t0, t1, xi);
    const Point2 target{xi[0] + dt * a[0], xi[1] + dt * a[1]};
    const std::size_t tri = mesh.locate(static_cast<std::size_t>(i), target);
    const auto lam = barycentric(mesh.corners(tri), target);
    std::vector<std::pair<std::int64_t, double>> row;
    double off = 0.0;
    for (int v = 0; v < 3; ++v) {
      const std::int64_t j = mesh.triangles()[tri][v];
      row.emplace_back(j, lam[v]);
      if (j != i) off += lam[v];
    }
    k.max_off_diagonal = std::max(k.max_off_diagonal, off);
    k.rows.emplace(i, std::move(row));
  }
  return k;
}

inline std::vector<std::int64_t> support_of(const NodeMeasure& mu) {
  std::vector<std::int64_t> s;
  s.reserve(mu.weights.size());
  for (const auto& [i, w] : mu.weights) s.push_back(i);
  return s;
}

inline NodeMeasure apply_kernel(const NodeMeasure& mu, const SlKernel& k) {
  NodeMeasure out{mu.mesh, {}};
  for (const auto& [i, w] : mu.weights) {
    for (const auto& [j, p] : k.row(i)) {
      if (p > 0.0) out.weights[j] += w * p;
    }
  }
  return out;
}

/// rho_j^{n+1} = sum over i of rho_i^n lambda_{i,j}^n.
inline NodeMeasure sl_step(const NodeMeasure& mu, const VelocityField<2>& field, double dt, std::int64_t n) {
  if (mu.mesh == nullptr) throw MeshError("node measure is not attached to a mesh");
  return apply_kernel(mu, sl_kernel(*mu.mesh, field, dt, n, support_of(mu)));
}

/// Iterates sl_step, calling observer(n, rho^n, kernel_n_or_null) for n = 0..steps.
template <class Observer>
NodeMeasure sl_run(const NodeMeasure& mu0, const VelocityField<2>& field, double dt, std::int64_t steps, Observer&& obs) {
  NodeMeasure mu = mu0;
  obs(std::int64_t{0}, mu, static_cast<const SlKernel*>(nullptr));
  for (std::int64_t n = 0; n < steps; ++n) {
    const SlKernel k = sl_kernel(*mu.mesh, field, dt, n, support_of(mu));
    mu = apply_kernel(mu, k);
    obs(n + 1, mu, &k);
  }
  return mu;
}

/// Node paths I^0..I^N of the semi-Lagrangian chain; same counter-based
/// sampling contract as the Cartesian chain.
inline std::vector<std::vector<std::int64_t>> sl_sample_paths(const NodeMeasure& mu0, const std::vector<SlKernel>& kernels,
                                                              std::int64_t count, std::uint64_t seed) {
  if (count < 1) throw RangeError("sample count must be positive");
  const CounterRng rng(seed);
  std::vector<std::pair<std::int64_t, double>> initial(mu0.weights.begin(), mu0.weights.end());
  std::vector<std::vector<std::int64_t>> paths(static_cast<std::size_t>(count));
  for (std::int64_t m = 0; m < count; ++m) {
    auto& path = paths[static_cast<std::size_t>(m)];
    path.reserve(kernels.size() + 1);
    std::int64_t state = detail::pick(initial, rng.uniform(static_cast<std::uint64_t>(m), 0));
    path.push_back(state);
    for (std::size_t n = 0; n < kernels.size(); ++n) {
      state = detail::pick(kernels[n].row(state), rng.uniform(static_cast<std::uint64_t>(m), n + 1));
      path.push_back(state);
    }
  }
  return paths;
}

/// W_1 between node weights and a single Dirac at p (exact: the only coupling).
inline double w1_to_dirac(const NodeMeasure& mu, const Point2& p) {
  CompensatedSum s;
  for (const auto& [i, w] : mu.weights) s += w * distance<2>(mu.mesh->nodes()[static_cast<std::size_t>(i)], p);
  return s.value();
}

}  // namespace mtlab
