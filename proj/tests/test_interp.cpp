#include <gtest/gtest.h>

#include <random>

#include "anisomesh/expression.hpp"
#include "anisomesh/generators.hpp"
#include "anisomesh/interp.hpp"
#include "oracles.hpp"

using namespace anisomesh;

namespace {

PolyMesh single(const std::vector<Vec2>& v) {
  std::vector<int> loop(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) loop[i] = static_cast<int>(i);
  return build_mesh(v, {loop});
}

int nearest_sub_node(const LocalHarmonicBasis& b, const Vec2& x) {
  int best = 0;
  for (std::size_t s = 1; s < b.sub.nodes.size(); ++s)
    if ((b.sub.nodes[s] - x).norm() < (b.sub.nodes[best] - x).norm()) best = static_cast<int>(s);
  return best;
}

// Checks shared by every element: partition of unity, bounds, linear precision.
void check_basis(const MeshElement& el, int depth, double tol) {
  const LocalHarmonicBasis b = build_basis(el, depth);
  const auto& verts = el.polygon.vertices();
  ASSERT_EQ(static_cast<std::size_t>(b.values.cols()), verts.size());
  const double h = el.diameter();
  for (Eigen::Index s = 0; s < b.values.rows(); ++s) {
    EXPECT_NEAR(b.values.row(s).sum(), 1.0, tol);
    EXPECT_GE(b.values.row(s).minCoeff(), -tol);
    EXPECT_LE(b.values.row(s).maxCoeff(), 1.0 + tol);
    Vec2 x = Vec2::Zero();
    for (std::size_t i = 0; i < verts.size(); ++i) x += b.values(s, static_cast<Eigen::Index>(i)) * verts[i];
    EXPECT_LT((x - b.sub.nodes[s]).norm(), tol * h);
  }
  // Nodal property at the element vertices.
  for (std::size_t i = 0; i < verts.size(); ++i) {
    const int s = nearest_sub_node(b, verts[i]);
    ASSERT_LT((b.sub.nodes[s] - verts[i]).norm(), 1e-14 * h);
    for (std::size_t j = 0; j < verts.size(); ++j)
      EXPECT_NEAR(b.values(s, static_cast<Eigen::Index>(j)), i == j ? 1.0 : 0.0, 1e-14);
  }
}

}  // namespace

TEST(Basis, TriangleIsBarycentric) {
  const PolyMesh m = single({{0.2, 0.1}, {1.7, 0.4}, {0.5, 1.3}});
  const MeshElement& el = m.element(0);
  const LocalHarmonicBasis b = build_basis(el, 3);
  const auto& v = el.polygon.vertices();
  const double det = cross(v[1] - v[0], v[2] - v[0]);
  for (std::size_t s = 0; s < b.sub.nodes.size(); ++s) {
    const Vec2& x = b.sub.nodes[s];
    const double l1 = cross(x - v[0], v[2] - v[0]) / det;
    const double l2 = cross(v[1] - v[0], x - v[0]) / det;
    EXPECT_NEAR(b.values(s, 0), 1 - l1 - l2, 1e-12);
    EXPECT_NEAR(b.values(s, 1), l1, 1e-12);
    EXPECT_NEAR(b.values(s, 2), l2, 1e-12);
  }
}

TEST(Basis, UnitSquareSymmetricValues) {
  const PolyMesh m = single({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
  const LocalHarmonicBasis b = build_basis(m.element(0), 3);
  const int c = nearest_sub_node(b, {0.5, 0.5});
  ASSERT_LT((b.sub.nodes[c] - Vec2(0.5, 0.5)).norm(), 1e-15);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(b.values(c, i), 0.25, 1e-12);
  const int mid = nearest_sub_node(b, {0.5, 0.0});
  EXPECT_NEAR(b.values(mid, 0), 0.5, 1e-15);
  EXPECT_NEAR(b.values(mid, 1), 0.5, 1e-15);
  EXPECT_NEAR(b.values(mid, 2), 0.0, 1e-15);
}

TEST(Basis, PartitionBoundsAndLinearPrecision) {
  check_basis(single({{0, 0}, {1, 0}, {1, 1}, {0, 1}}).element(0), 3, 1e-12);
  // Hanging node: collinear loop vertex.
  check_basis(single({{0, 0}, {1, 0}, {1, 0.5}, {1, 1}, {0, 1}}).element(0), 3, 1e-12);
  // Non-convex L-shape.
  check_basis(single({{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}}).element(0), 3, 1e-12);
  std::mt19937_64 rng(21);
  for (int t = 0; t < 10; ++t) {
    const auto pts = oracle::star_polygon(rng, 4 + t % 6, t % 2 ? 30.0 : 1.0);
    check_basis(single(pts).element(0), 2, 1e-11);
  }
}

TEST(Basis, AutomaticDepthGrowsWithAnisotropy) {
  const PolyMesh sq = single({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
  EXPECT_EQ(basis_depth_for(sq.element(0).spectrum, -1), 3);
  const PolyMesh sliver = single({{0, 0}, {1000, 0}, {1000, 1}, {0, 1}});
  EXPECT_EQ(basis_depth_for(sliver.element(0).spectrum, -1), 5);
  EXPECT_EQ(basis_depth_for(sliver.element(0).spectrum, 2), 2);
}

TEST(BasisCache, ReusesUnchangedElements) {
  BasisCache cache;
  const PolyMesh m = grid_mesh(3, 3);
  const BasisSet a = build_bases(m, 2, &cache);
  EXPECT_EQ(cache.misses(), 9u);
  const BasisSet b = build_bases(m, 2, &cache);
  EXPECT_EQ(cache.misses(), 9u);
  EXPECT_EQ(cache.hits(), 9u);
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(a[k].get(), b[k].get());
  build_bases(m, 3, &cache);
  EXPECT_EQ(cache.size(), 18u);
}

TEST(Interpolation, ConstantsReproduced) {
  const PolyMesh m = polygonal_mesh(4, 4, 0.3, 3, 0.4);
  const BasisSet bases = build_bases(m, 2);
  const ScalarField one = expression_field("2.5");
  for (Scheme s : {Scheme::Pointwise, Scheme::Clement, Scheme::ScottZhang}) {
    const InterpolantCoefficients c = coefficients(m, one, s, {}, false);
    for (double x : c.values) EXPECT_NEAR(x, 2.5, 1e-12) << to_string(s);
    EXPECT_LT(l2_error(m, one, c, bases), 1e-11) << to_string(s);
  }
}

TEST(Interpolation, PointwiseExactForLinear) {
  const PolyMesh m = polygonal_mesh(4, 4, 0.3, 3, 0.4);
  const BasisSet bases = build_bases(m, 2);
  const ScalarField v = expression_field("3*x1 - 2*x2 + 0.5");
  const InterpolantCoefficients c = coefficients(m, v, Scheme::Pointwise);
  EXPECT_LE(l2_error(m, v, c, bases), 1e-8);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    const Vec2 x(u(rng), u(rng));
    EXPECT_NEAR(interpolant_value(m, bases, c, x), v.value(x), 1e-12);
  }
}

TEST(Interpolation, ClementPatchMean) {
  const PolyMesh m = grid_mesh(2, 2);
  const InterpolantCoefficients c = coefficients(m, expression_field("x1"), Scheme::Clement);
  EXPECT_NEAR(c.values[4], 0.5, 1e-13);
  // Boundary nodes are Dirichlet and stay at zero.
  EXPECT_EQ(c.values[0], 0.0);
  const InterpolantCoefficients all = coefficients(m, expression_field("x1"), Scheme::Clement, {}, false);
  EXPECT_NEAR(all.values[0], 0.25, 1e-13);
}

TEST(Interpolation, ScottZhangEdgeChoice) {
  const PolyMesh m = single({{0, 0}, {2, 0}, {2, 1}, {0, 1}});
  const MeshEdge& e0 = m.edge(scott_zhang_edge(m, 0));
  EXPECT_NEAR((m.node(e0.nodes[0]).coords - m.node(e0.nodes[1]).coords).norm(), 2.0, 1e-15);
  // Edge mean of x1 over the bottom edge.
  const InterpolantCoefficients c = coefficients(m, expression_field("x1"), Scheme::ScottZhang);
  EXPECT_NEAR(c.values[0], 1.0, 1e-13);
  // Equal lengths: lowest edge id wins.
  const PolyMesh g = grid_mesh(2, 2);
  const auto edges = g.node_edges(4);
  EXPECT_EQ(scott_zhang_edge(g, 4), *std::min_element(edges.begin(), edges.end()));
}

TEST(Interpolation, PointOutsideMesh) {
  const PolyMesh m = grid_mesh(2, 2);
  const BasisSet bases = build_bases(m, 1);
  const InterpolantCoefficients c = coefficients(m, expression_field("x1"), Scheme::Pointwise);
  try {
    interpolant_value(m, bases, c, {2, 2});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::PointOutsideMesh);
  }
  EXPECT_NEAR(interpolant_value(m, bases, c, {1, 1}), 1.0, 1e-14);
}
