#include <gtest/gtest.h>

#include <random>

#include "anisomesh/expression.hpp"
#include "anisomesh/generators.hpp"
#include "anisomesh/refine.hpp"
#include "oracles.hpp"

using namespace anisomesh;

namespace {

PolyMesh unit_square() { return build_mesh({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {{0, 1, 2, 3}}); }

PolyMesh two_squares() {
  return build_mesh({{0, 0}, {1, 0}, {2, 0}, {2, 1}, {1, 1}, {0, 1}}, {{0, 1, 4, 5}, {1, 2, 3, 4}});
}

PolyMesh rectangle_mesh(double a, double b) { return build_mesh({{0, 0}, {a, 0}, {a, b}, {0, b}}, {{0, 1, 2, 3}}); }

}  // namespace

TEST(Mark, Examples) {
  EXPECT_EQ(mark({1, 1, 10}, 0.9), std::vector<int>{2});
  EXPECT_EQ(mark({2, 2, 2, 2}, 0.9), (std::vector<int>{0, 1, 2, 3}));
  EXPECT_TRUE(mark({0, 0, 0}, 0.9).empty());
  EXPECT_TRUE(mark(std::vector<double>{}, 0.9).empty());
}

TEST(Mark, MatchesBruteForceFilter) {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> len(1, 200);
  std::exponential_distribution<double> ex(1.0);
  std::uniform_real_distribution<double> factor(0.1, 1.0);
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> eta(len(rng));
    for (auto& e : eta) e = t % 3 == 0 ? std::floor(4 * ex(rng)) : ex(rng);
    const double f = t % 2 ? 0.9 : factor(rng);
    EXPECT_EQ(mark(eta, f), oracle::brute_force_mark(eta, f));
  }
}

TEST(SplitDirection, IsotropicRectangle) {
  const PolyMesh m = rectangle_mesh(2, 1);
  const SplitDirection d = split_direction(m.element(0), nullptr, Strategy::Isotropic);
  EXPECT_NEAR(std::abs(d.direction.y()), 1.0, 1e-14);
  EXPECT_NEAR(d.direction.dot(d.normal), 0.0, 1e-15);
}

TEST(SplitDirection, AnisotropicFollowsGram) {
  const PolyMesh m = unit_square();
  const Mat2 g = (Mat2() << 1, 0, 0, 0).finished();
  const SplitDirection d = split_direction(m.element(0), &g, Strategy::Anisotropic);
  EXPECT_NEAR(std::abs(d.direction.y()), 1.0, 1e-14);
  EXPECT_FALSE(d.fallback);
  // Horizontal cut for v = x2 on a long element: the Gram overrides the shape.
  const PolyMesh r = rectangle_mesh(4, 1);
  const Mat2 gy = (Mat2() << 0, 0, 0, 1).finished();
  const SplitDirection h = split_direction(r.element(0), &gy, Strategy::Anisotropic);
  EXPECT_NEAR(std::abs(h.direction.x()), 1.0, 1e-14);
}

TEST(SplitDirection, TieAndZeroGram) {
  const PolyMesh m = unit_square();
  const SplitDirection iso = split_direction(m.element(0), nullptr, Strategy::Isotropic);
  EXPECT_EQ(iso.direction, Vec2(0, 1));
  const Mat2 zero = Mat2::Zero();
  const SplitDirection z = split_direction(m.element(0), &zero, Strategy::Anisotropic);
  EXPECT_TRUE(z.fallback);
  EXPECT_EQ(z.direction, iso.direction);
  // Gram with equal eigenvalues: canonical x-axis, cut along y.
  const Mat2 eye = Mat2::Identity();
  EXPECT_EQ(split_direction(m.element(0), &eye, Strategy::Anisotropic).direction, Vec2(0, 1));
}

TEST(SplitDirection, OrthogonalToSelectedEigenvector) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n(0.0, 1.0);
  const PolyMesh m = polygonal_mesh(3, 3, 0.3, 2);
  for (int t = 0; t < 200; ++t) {
    Mat2 g;
    g(0, 0) = std::abs(n(rng));
    g(1, 1) = std::abs(n(rng));
    g(0, 1) = g(1, 0) = 0.5 * n(rng) * std::sqrt(g(0, 0) * g(1, 1));
    const MeshElement& el = m.element(t % m.num_elements());
    const SplitDirection d = split_direction(el, &g, Strategy::Anisotropic);
    EXPECT_NEAR(d.direction.dot(symmetric_eigen(g).u1), 0.0, 1e-12);
    const SplitDirection i = split_direction(el, &g, Strategy::Isotropic);
    EXPECT_NEAR(i.direction.dot(el.spectrum.u1), 0.0, 1e-12);
  }
}

TEST(Refine, UniformSingleSquare) {
  const RefineResult r = refine(unit_square(), {}, Strategy::Uniform);
  EXPECT_EQ(r.mesh.num_elements(), 2u);
  EXPECT_EQ(r.mesh.num_nodes(), 6u);
  EXPECT_EQ(r.step.new_nodes.size(), 2u);
  for (const auto& el : r.mesh.elements()) EXPECT_NEAR(el.area(), 0.5, 1e-15);
  // New nodes sit on the Dirichlet boundary and inherit its tag.
  for (int i : r.step.new_nodes) EXPECT_EQ(r.mesh.node(i).tag, BoundaryTag::dirichlet);
}

TEST(Refine, HangingNodesOnNeighbour) {
  const PolyMesh m = two_squares();
  IndicatorReport vertical = eta_global(m, expression_field("x1"));
  const RefineResult a = refine(m, {0}, Strategy::Anisotropic, &vertical);
  EXPECT_EQ(a.mesh.element(1).loop.size(), 4u);
  EXPECT_EQ(a.mesh.num_elements(), 3u);
  IndicatorReport horizontal = eta_global(m, expression_field("x2"));
  const RefineResult b = refine(m, {0}, Strategy::Anisotropic, &horizontal);
  EXPECT_EQ(b.mesh.element(1).loop.size(), 5u);
  ASSERT_EQ(b.step.children.size(), 1u);
  EXPECT_EQ(b.step.children[0].second, (std::array<int, 2>{0, 2}));
  // The hanging node is interior and shared by all three elements.
  int hanging = -1;
  for (int i : b.step.new_nodes)
    if (b.mesh.node(i).coords.isApprox(Vec2(1, 0.5))) hanging = i;
  ASSERT_GE(hanging, 0);
  EXPECT_EQ(b.mesh.node(hanging).tag, BoundaryTag::interior);
  EXPECT_EQ(b.mesh.node_patch(hanging).size(), 3u);
}

TEST(Refine, RejectsOutOfRangeIds) {
  EXPECT_THROW(refine(unit_square(), {3}, Strategy::Isotropic), Error);
}

TEST(AdaptiveLoop, ConstantFieldStopsImmediately) {
  RefineConfig rc;
  rc.max_levels = 5;
  const auto levels = adaptive_loop(grid_mesh(2, 2), expression_field("1.5"), rc);
  ASSERT_EQ(levels.size(), 1u);
  EXPECT_TRUE(levels[0].report.marked.empty());
  EXPECT_FALSE(levels[0].step.has_value());
}

TEST(AdaptiveLoop, InvalidConfig) {
  RefineConfig rc;
  rc.marking_factor = 0.0;
  EXPECT_THROW(adaptive_loop(grid_mesh(2, 2), tanh_layer(), rc), Error);
  rc.marking_factor = 0.9;
  rc.max_levels = -1;
  EXPECT_THROW(adaptive_loop(grid_mesh(2, 2), tanh_layer(), rc), Error);
}

TEST(AdaptiveLoop, EveryLevelValidAndAreaConserved) {
  for (Strategy s : {Strategy::Uniform, Strategy::Isotropic, Strategy::Anisotropic}) {
    RefineConfig rc;
    rc.strategy = s;
    rc.max_levels = s == Strategy::Uniform ? 5 : 8;
    int seen = 0;
    const auto levels = adaptive_loop(polygonal_mesh(4, 4, 0.25, 9, 0.4), tanh_layer(), rc,
                                      [&](const LevelResult& l) { EXPECT_EQ(l.level, seen++); });
    EXPECT_EQ(static_cast<int>(levels.size()), rc.max_levels + 1);
    for (const auto& l : levels) {
      EXPECT_NO_THROW(l.mesh.validate());
      EXPECT_NEAR(l.mesh.total_area(), 1.0, 1e-10);
      if (l.step) {
        EXPECT_TRUE(l.step->skipped.empty());
      }
    }
  }
}

TEST(AdaptiveLoop, Deterministic) {
  RefineConfig rc;
  rc.strategy = Strategy::Anisotropic;
  rc.max_levels = 6;
  const auto a = adaptive_loop(grid_mesh(4, 4), tanh_layer(), rc);
  const auto b = adaptive_loop(grid_mesh(4, 4), tanh_layer(), rc);
  ASSERT_EQ(a.back().mesh.num_nodes(), b.back().mesh.num_nodes());
  for (std::size_t i = 0; i < a.back().mesh.num_nodes(); ++i)
    EXPECT_EQ(a.back().mesh.node(i).coords, b.back().mesh.node(i).coords);
  EXPECT_EQ(a.back().mesh.loops(), b.back().mesh.loops());
}

TEST(AdaptiveLoop, ChildGramMatricesSumToParent) {
  // Splits partition the parent, so Gram matrices are additive. A cubic field
  // keeps the integrand polynomial and the quadrature exact.
  RefineConfig rc;
  rc.strategy = Strategy::Anisotropic;
  rc.max_levels = 6;
  const ScalarField w = expression_field("x1^2*x2 + x2^3 - x1");
  const auto levels = adaptive_loop(grid_mesh(4, 4), tanh_layer(), rc);
  std::size_t checked = 0;
  for (std::size_t l = 0; l + 1 < levels.size(); ++l) {
    const PolyMesh& parent = levels[l].mesh;
    const PolyMesh& next = levels[l + 1].mesh;
    for (const auto& [pid, kids] : levels[l].step->children) {
      const Mat2 G = gram_element(parent.element(pid), w);
      const Mat2 sum = gram_element(next.element(kids[0]), w) + gram_element(next.element(kids[1]), w);
      EXPECT_LT((G - sum).norm(), 1e-12 * (1 + G.norm()));
      EXPECT_NEAR(parent.element(pid).area(), next.element(kids[0]).area() + next.element(kids[1]).area(), 1e-15);
      ++checked;
    }
  }
  EXPECT_GT(checked, 50u);
}

TEST(Strategy, Names) {
  EXPECT_EQ(parse_strategy("uniform"), Strategy::Uniform);
  EXPECT_EQ(parse_strategy("ISOTROPIC"), Strategy::Isotropic);
  EXPECT_EQ(parse_strategy("anisotropic"), Strategy::Anisotropic);
  EXPECT_STREQ(to_string(Strategy::Anisotropic), "anisotropic");
  EXPECT_THROW(parse_strategy("random"), Error);
}
