#include <gtest/gtest.h>

#include <sstream>

#include "anisomesh/expression.hpp"
#include "anisomesh/generators.hpp"
#include "anisomesh/verify.hpp"

using namespace anisomesh;

TEST(Trace, ConstantsAndZero) {
  const Polygon sq = rectangle(1, 1);
  for (std::size_t e = 0; e < 4; ++e) EXPECT_NEAR(check_trace(sq, e, expression_field("1")).ratio, 1.0, 1e-11);
  EXPECT_EQ(check_trace(sq, 0, expression_field("0")).ratio, 0.0);
}

TEST(Trace, LinearOnRectangle) {
  // [0,2]x[0,1], v = x1, bottom edge: 8/3 against (8/3 + 8).
  const InequalityRecord r = check_trace(rectangle(2, 1), 0, expression_field("x1"));
  EXPECT_NEAR(r.lhs, 8.0 / 3, 1e-12);
  EXPECT_NEAR(r.rhs, 8.0 / 3 + 8.0, 1e-10);
  EXPECT_NEAR(r.ratio, 0.25, 1e-12);
}

TEST(Poincare, ConstantsAndLinear) {
  EXPECT_EQ(check_poincare(rectangle(3, 1), expression_field("4")).ratio, 0.0);
  const InequalityRecord r = check_poincare(rectangle(1, 1), expression_field("x1"));
  EXPECT_NEAR(r.lhs, std::sqrt(1.0 / 12), 1e-11);
  EXPECT_NEAR(r.rhs, 1.0, 1e-11);
  // Patch version on the 2x2 grid: the patch of any cell is the whole square.
  const PolyMesh g = grid_mesh(2, 2);
  const InequalityRecord p = check_poincare(g, 0, expression_field("x2"));
  EXPECT_NEAR(p.lhs, std::sqrt(1.0 / 12), 1e-11);
}

TEST(Poincare, StretchInvariantForStretchedFields) {
  const ScalarField f = expression_field("x1*x2^2");
  const double base = check_poincare(rectangle(1, 1), f).ratio;
  for (double s : {10.0, 1e3}) EXPECT_NEAR(check_poincare(rectangle(s, 1), stretched(f, s)).ratio, base, 1e-9);
}

TEST(H1Mapping, SandwichOnRectangle) {
  // v = x1 on [0,2]x[0,1]: |v|^2 = 2, mapped seminorm 4, bound factor 2.
  const InequalityRecord r = check_h1_mapping(rectangle(2, 1), expression_field("x1"));
  EXPECT_NEAR(r.lhs, 2.0, 1e-10);
  EXPECT_NEAR(r.rhs, 4.0, 1e-10);
  EXPECT_NEAR(r.bound, 2.0, 1e-12);
  // The case sits on the lower end of the sandwich, so negative slack trips it.
  try {
    check_h1_mapping(rectangle(2, 1), expression_field("x1"), {}, -0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SandwichViolated);
  }
}

TEST(Neighbour, SelfAndTranslatedCopies) {
  const PolyMesh g = grid_mesh(3, 2);
  const ScalarField v = tanh_layer();
  const InequalityRecord self = check_neighbour_gradient(g.element(0), g.element(0), v);
  EXPECT_NEAR(self.ratio, 1.0, 1e-14);
  EXPECT_NEAR(self.bound, 1.0, 1e-12);
  const InequalityRecord r = check_neighbour_gradient(g.element(0), g.element(1), v);
  EXPECT_NEAR(r.ratio, 1.0, 1e-12);
}

TEST(Sweeps, TraceAndPoincareStable) {
  const SweepResult t = sweep_trace();
  EXPECT_TRUE(t.passed) << t.summary;
  EXPECT_LE(t.worst_spread, 2.0);
  EXPECT_EQ(t.records.size(), 11u * 4u * 5u);
  const SweepResult p = sweep_poincare();
  EXPECT_TRUE(p.passed) << p.summary;
  EXPECT_LE(p.worst_spread, 2.0);
  std::ostringstream csv;
  write_sweep_csv(p, csv);
  EXPECT_EQ(csv.str().rfind("name,context,ratio\n", 0), 0u);
}

TEST(Sweeps, H1AndNeighbour) {
  const SweepResult h = sweep_h1(3, 10);
  EXPECT_TRUE(h.passed) << h.summary;
  for (const auto& r : h.records) {
    EXPECT_GE(r.ratio, 1.0 / r.bound - 1e-9);
    EXPECT_LE(r.ratio, r.bound + 1e-9);
  }
  // Squared gradients of cubics are quartic, so the plain order-7 rule is exact.
  QuadratureOptions exact;
  exact.depth = 0;
  const SweepResult n = sweep_neighbour(polygonal_mesh(4, 4, 0.3, 2, 0.3), polynomial_fields(false), exact);
  EXPECT_TRUE(n.passed) << n.summary;
}
