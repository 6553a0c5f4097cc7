#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "mtlab/semi_lagrangian.hpp"

using namespace mtlab;

namespace {

const std::array<Point2, 3> kRef{Point2{0.0, 0.0}, Point2{1.0, 0.0}, Point2{0.0, 1.0}};

}  // namespace

TEST(Barycentric, ReferencePoints) {
  const auto c = barycentric(kRef, {1.0 / 3.0, 1.0 / 3.0});
  for (double l : c) EXPECT_NEAR(l, 1.0 / 3.0, 1e-15);
  const auto v = barycentric(kRef, {1.0, 0.0});
  EXPECT_EQ(v, (std::array<double, 3>{0.0, 1.0, 0.0}));
  const auto m = barycentric(kRef, {0.5, 0.0});
  EXPECT_DOUBLE_EQ(m[0], 0.5);
  EXPECT_DOUBLE_EQ(m[1], 0.5);
  EXPECT_DOUBLE_EQ(m[2], 0.0);
  EXPECT_THROW(barycentric(kRef, {0.8, 0.8}), RangeError);
}

TEST(Barycentric, ReproducesAffineFunctions) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-3.0, 3.0), w(0.0, 1.0);
  for (int s = 0; s < 1000; ++s) {
    const std::array<Point2, 3> t{Point2{u(rng), u(rng)}, Point2{u(rng), u(rng)}, Point2{u(rng), u(rng)}};
    if (std::abs(signed_area(t[0], t[1], t[2])) < 1e-2) continue;
    double a = w(rng), b = w(rng);
    if (a + b > 1.0) {
      a = 1.0 - a;
      b = 1.0 - b;
    }
    const Point2 xi{t[0][0] + a * (t[1][0] - t[0][0]) + b * (t[2][0] - t[0][0]),
                    t[0][1] + a * (t[1][1] - t[0][1]) + b * (t[2][1] - t[0][1])};
    const Point2 zeta{u(rng), u(rng)};
    const auto lam = barycentric(t, xi);
    for (int i = 0; i < 2; ++i) {
      double r = -(xi[i] - zeta[i]);
      for (int k = 0; k < 3; ++k) r += lam[k] * (t[k][i] - zeta[i]);
      EXPECT_LE(std::abs(r), 1e-12);
    }
  }
}

TEST(TriMesh, StructuredGeometry) {
  const auto mesh = TriMesh::structured(0.0, 0.0, 0.25, 4, 4);
  EXPECT_EQ(mesh.node_count(), 25u);
  EXPECT_EQ(mesh.triangles().size(), 32u);
  EXPECT_NEAR(mesh.hbar(), 0.25 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(mesh.longest_edge(), 0.25 * std::sqrt(2.0), 1e-15);
  // An interior node belongs to six triangles.
  EXPECT_EQ(mesh.star(12).size(), 6u);
}

TEST(TriMesh, ReadsOneBasedFile) {
  std::istringstream in("# unit square\nv 0 0\nv 1 0\nv 1 1\nv 0 1\nt 1 2 3\nt 1 3 4\n");
  const auto mesh = TriMesh::read(in);
  EXPECT_EQ(mesh.node_count(), 4u);
  EXPECT_EQ(mesh.triangles()[1], (Triangle{0, 2, 3}));
}

TEST(TriMesh, RejectsMalformedInput) {
  std::istringstream missing("v 0 0\nv 1 0\nv 0 1\nt 1 2 4\n");
  EXPECT_THROW(TriMesh::read(missing), MeshError);
  std::istringstream flat("v 0 0\nv 1 0\nv 2 0\nt 1 2 3\n");
  EXPECT_THROW(TriMesh::read(flat), MeshError);
  std::istringstream junk("v 0 0\nq 1 2\n");
  EXPECT_THROW(TriMesh::read(junk), MeshError);
  // Node 5 sits in the middle of the edge (1,2) of the first triangle.
  std::istringstream hanging("v 0 0\nv 2 0\nv 0 2\nv 2 -2\nv 1 0\nt 1 2 3\nt 1 5 4\nt 5 2 4\n");
  EXPECT_THROW(TriMesh::read(hanging), MeshError);
}

TEST(TriMesh, OrientsTrianglesCounterClockwise) {
  TriMesh mesh({{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}}, {{0, 2, 1}});
  const auto c = mesh.corners(0);
  EXPECT_GT(signed_area(c[0], c[1], c[2]), 0.0);
}

TEST(SlStep, ZeroFieldIsIdentity) {
  const auto mesh = TriMesh::structured(0.0, 0.0, 0.25, 4, 4);
  NodeMeasure mu{&mesh, {{6, 0.5}, {12, 0.5}}};
  const auto next = sl_step(mu, fields::constant<2>({0.0, 0.0}), 0.1, 0);
  EXPECT_EQ(next.weights, mu.weights);
}

TEST(SlStep, HalfEdgeDisplacementSplitsInHalf) {
  const auto mesh = TriMesh::structured(0.0, 0.0, 0.25, 4, 4);
  const std::size_t node = 12;  // (0.5, 0.5)
  const auto next = sl_step(node_dirac(mesh, node), fields::constant<2>({1.0, 0.0}), 0.125, 0);
  ASSERT_EQ(next.weights.size(), 2u);
  EXPECT_DOUBLE_EQ(next.at(12), 0.5);
  EXPECT_DOUBLE_EQ(next.at(13), 0.5);
}

TEST(SlStep, VerticalHalfEdge) {
  const auto mesh = TriMesh::structured(0.0, 0.0, 0.25, 4, 4);
  const auto mu = sl_step(node_dirac(mesh, 12), fields::constant<2>({0.0, 1.0}), 0.125, 0);
  EXPECT_DOUBLE_EQ(mu.at(12), 0.5);
  EXPECT_DOUBLE_EQ(mu.at(17), 0.5);
}

TEST(SlStep, RefusesCflViolation) {
  const auto mesh = TriMesh::structured(0.0, 0.0, 0.25, 4, 4);
  EXPECT_THROW(sl_step(node_dirac(mesh, 12), fields::constant<2>({1.0, 0.0}), 0.25, 0), CflError);
}

TEST(SlStep, LeavingTheMeshIsAMeshError) {
  const auto mesh = TriMesh::structured(0.0, 0.0, 0.25, 4, 4);
  EXPECT_THROW(sl_step(node_dirac(mesh, 4), fields::constant<2>({1.0, 0.0}), 0.1, 0), MeshError);
}

TEST(SlKernel, MassBoundsAndLawEquivalence) {
  const auto mesh = TriMesh::structured(-2.0, -2.0, 0.1, 40, 40);
  VelocityField<2> f;
  f.eval = [](double, const Point2& x) { return Point2{0.6 * std::cos(3.0 * x[1]), 0.6 * std::sin(2.0 * x[0])}; };
  f.a_inf = 0.6;
  const double dt = 0.5 * mesh.hbar() / f.a_inf;
  NodeMeasure mu{&mesh, {}};
  mu.weights[static_cast<std::int64_t>(mesh.nearest_node({0.0, 0.0}))] = 0.7;
  mu.weights[static_cast<std::int64_t>(mesh.nearest_node({0.1, -0.2}))] = 0.3;
  NodeMeasure via_kernel = mu;
  for (int n = 0; n < 12; ++n) {
    const auto k = sl_kernel(mesh, f, dt, n, support_of(mu));
    EXPECT_LE(k.max_off_diagonal, 2.0 * f.a_inf * dt / mesh.hbar() + 1e-12);
    for (const auto& [i, row] : k.rows) {
      ASSERT_LE(row.size(), 3u);
      double s = 0.0;
      for (const auto& [j, p] : row) {
        EXPECT_GE(p, 0.0);
        s += p;
      }
      EXPECT_NEAR(s, 1.0, 1e-15);
    }
    via_kernel = apply_kernel(via_kernel, k);
    mu = sl_step(mu, f, dt, n);
    EXPECT_NEAR(mu.mass(), 1.0, 1e-13);
  }
  for (const auto& [i, w] : mu.weights) EXPECT_NEAR(w, via_kernel.at(i), 1e-12);
}

TEST(SlKernel, IncrementsHaveTheNodeDrift) {
  const auto mesh = TriMesh::structured(-1.0, -1.0, 0.1, 20, 20);
  const auto f = fields::constant<2>({0.6, 0.3});
  const double dt = 0.5 * mesh.hbar() / f.a_inf;
  const auto mu0 = node_dirac(mesh, mesh.nearest_node({0.0, 0.0}));
  std::vector<SlKernel> ks;
  NodeMeasure law = mu0;
  for (int n = 0; n < 3; ++n) {
    ks.push_back(sl_kernel(mesh, f, dt, n, support_of(law)));
    law = apply_kernel(law, ks.back());
  }
  const auto paths = sl_sample_paths(mu0, ks, 40000, 3);
  // Step 0 starts from a single node: mean displacement must be dt a.
  double mx = 0.0, my = 0.0, vx = 0.0, vy = 0.0;
  for (const auto& p : paths) {
    const auto& a = mesh.nodes()[static_cast<std::size_t>(p[0])];
    const auto& b = mesh.nodes()[static_cast<std::size_t>(p[1])];
    mx += b[0] - a[0];
    my += b[1] - a[1];
    vx += (b[0] - a[0]) * (b[0] - a[0]);
    vy += (b[1] - a[1]) * (b[1] - a[1]);
  }
  const double m = static_cast<double>(paths.size());
  mx /= m;
  my /= m;
  const double sex = std::sqrt((vx / m - mx * mx) / m);
  const double sey = std::sqrt((vy / m - my * my) / m);
  EXPECT_LE(std::abs(mx - dt * 0.6), 4.0 * sex);
  EXPECT_LE(std::abs(my - dt * 0.3), 4.0 * sey);
}

TEST(W1ToDirac, SumOfWeightedDistances) {
  const auto mesh = TriMesh::structured(0.0, 0.0, 1.0, 1, 1);
  NodeMeasure mu{&mesh, {{0, 0.5}, {3, 0.5}}};
  EXPECT_NEAR(w1_to_dirac(mu, {0.0, 1.0}), 1.0, 1e-15);
}
