#include <gtest/gtest.h>

#include <sstream>

#include "anisomesh/generators.hpp"
#include "anisomesh/mesh.hpp"
#include "anisomesh/mesh_io.hpp"

using namespace anisomesh;

namespace {

PolyMesh unit_square() { return build_mesh({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {{0, 1, 2, 3}}); }

// Left square cut at y = 0.5; the right square keeps the cut point (1, 0.5)
// on its left side as a hanging node.
PolyMesh hanging_example() {
  const std::vector<Vec2> c = {{0, 0}, {1, 0}, {2, 0}, {2, 1}, {1, 1}, {0, 1}, {0, 0.5}, {1, 0.5}};
  return build_mesh(c, {{0, 1, 7, 6}, {6, 7, 4, 5}, {1, 2, 3, 4, 7}});
}

std::string roundtrip(const PolyMesh& m) {
  std::ostringstream a;
  write_mesh(m, a);
  std::istringstream in(a.str());
  const PolyMesh back = read_mesh(in);
  std::ostringstream b;
  write_mesh(back, b);
  EXPECT_EQ(a.str(), b.str());
  return a.str();
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::InvalidConfig;
}

}  // namespace

TEST(PolyMesh, SingleSquareCounts) {
  const PolyMesh m = unit_square();
  EXPECT_EQ(m.num_nodes(), 4u);
  EXPECT_EQ(m.num_edges(), 4u);
  EXPECT_EQ(m.num_elements(), 1u);
  EXPECT_EQ(m.node_patch(0), std::vector<int>{0});
  for (std::size_t e = 0; e < m.num_edges(); ++e) {
    EXPECT_EQ(m.edge_patch(e), std::vector<int>{0});
    EXPECT_TRUE(m.edge(e).on_boundary());
    EXPECT_EQ(m.edge(e).tag, BoundaryTag::dirichlet);
  }
}

TEST(PolyMesh, TwoByTwoGrid) {
  const PolyMesh m = grid_mesh(2, 2);
  EXPECT_EQ(m.num_nodes(), 9u);
  EXPECT_EQ(m.num_edges(), 12u);
  EXPECT_EQ(m.num_elements(), 4u);
  EXPECT_EQ(m.node_patch(4), (std::vector<int>{0, 1, 2, 3}));
  EXPECT_EQ(m.node(4).tag, BoundaryTag::interior);
  // Interior edge between the center and the bottom midpoint.
  const auto e = m.find_edge(4, 1);
  ASSERT_TRUE(e.has_value());
  EXPECT_FALSE(m.edge(*e).on_boundary());
  EXPECT_EQ(m.edge_patch(*e), (std::vector<int>{0, 1, 2, 3}));
  EXPECT_EQ(m.max_node_valence(), 4u);
  EXPECT_NEAR(m.total_area(), 1.0, 1e-15);
  EXPECT_NEAR(m.domain_area(), 1.0, 1e-15);
  EXPECT_EQ(m.neighbour_pairs().size(), 6u);
}

TEST(PolyMesh, HangingNode) {
  const PolyMesh m = hanging_example();
  EXPECT_EQ(m.element(2).loop.size(), 5u);
  // Interior angle pi at the hanging node: it is collinear with its loop neighbours.
  const Vec2 a = m.node(1).coords, b = m.node(7).coords, c = m.node(4).coords;
  EXPECT_NEAR(cross(b - a, c - b), 0.0, 1e-15);
  EXPECT_EQ(m.node_patch(7), (std::vector<int>{0, 1, 2}));
  EXPECT_EQ(m.node(7).tag, BoundaryTag::interior);
  EXPECT_NEAR(m.total_area(), 2.0, 1e-15);
  // The long side of the right element is split into two edges.
  EXPECT_TRUE(m.find_edge(1, 7).has_value());
  EXPECT_TRUE(m.find_edge(7, 4).has_value());
  EXPECT_FALSE(m.find_edge(1, 4).has_value());
}

TEST(PolyMesh, NonConformingHangingNodeRejected) {
  // Same geometry, but the right element skips the node on its side.
  const std::vector<Vec2> c = {{0, 0}, {1, 0}, {2, 0}, {2, 1}, {1, 1}, {0, 1}, {0, 0.5}, {1, 0.5}};
  EXPECT_EQ(kind_of([&] { build_mesh(c, {{0, 1, 7, 6}, {6, 7, 4, 5}, {1, 2, 3, 4}}); }),
            ErrorKind::InvalidTopology);
}

TEST(PolyMesh, InvariantViolations) {
  const std::vector<Vec2> sq = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  // Clockwise loop.
  EXPECT_EQ(kind_of([&] { build_mesh(sq, {{0, 3, 2, 1}}); }), ErrorKind::InvalidTopology);
  // Repeated node, missing node, short loop.
  EXPECT_EQ(kind_of([&] { build_mesh(sq, {{0, 1, 1, 2}}); }), ErrorKind::InvalidTopology);
  EXPECT_EQ(kind_of([&] { build_mesh(sq, {{0, 1, 7}}); }), ErrorKind::InvalidTopology);
  EXPECT_EQ(kind_of([&] { build_mesh(sq, {{0, 1}}); }), ErrorKind::InvalidTopology);
  // Overlapping elements.
  EXPECT_EQ(kind_of([&] { build_mesh(sq, {{0, 1, 2, 3}, {0, 1, 2}}); }), ErrorKind::InvalidTopology);
  // Unused node.
  EXPECT_EQ(kind_of([&] { build_mesh({{0, 0}, {1, 0}, {1, 1}, {0, 1}, {5, 5}}, {{0, 1, 2, 3}}); }),
            ErrorKind::InvalidTopology);
  // Boundary node tagged interior.
  std::vector<MeshNode> nodes(4);
  for (int i = 0; i < 4; ++i) nodes[i] = {sq[i], BoundaryTag::dirichlet};
  nodes[2].tag = BoundaryTag::interior;
  EXPECT_EQ(kind_of([&] { PolyMesh(nodes, {{0, 1, 2, 3}}); }), ErrorKind::InvalidTopology);
}

TEST(PolyMesh, BoundaryTags) {
  BoundarySpec spec;
  spec.default_tag = BoundaryTag::neumann;
  spec.classify = [](const Vec2& x) { return x.y() == 0.0 ? BoundaryTag::dirichlet : BoundaryTag::neumann; };
  const PolyMesh m = grid_mesh(2, 2, spec);
  int dirichlet_edges = 0;
  for (const auto& e : m.edges()) {
    if (!e.on_boundary()) {
      EXPECT_EQ(e.tag, BoundaryTag::interior);
      continue;
    }
    if (e.tag == BoundaryTag::dirichlet) ++dirichlet_edges;
  }
  EXPECT_EQ(dirichlet_edges, 2);
  m.validate();
}

TEST(MeshIO, RoundTrips) {
  roundtrip(unit_square());
  roundtrip(grid_mesh(2, 2));
  roundtrip(hanging_example());
  const std::string text = roundtrip(polygonal_mesh(5, 4, 0.3, 17, 0.5));
  EXPECT_EQ(text.rfind("polymesh 2 1\n", 0), 0u);
}

TEST(MeshIO, FullPrecision) {
  const PolyMesh m = build_mesh({{0, 0}, {1.0 / 3, 0}, {1.0 / 3, 0.1 + 0.2}}, {{0, 1, 2}});
  std::stringstream s;
  write_mesh(m, s);
  const PolyMesh back = read_mesh(s);
  EXPECT_EQ(back.node(1).coords.x(), 1.0 / 3);
  EXPECT_EQ(back.node(2).coords.y(), 0.1 + 0.2);
}

TEST(MeshIO, ParseErrorsCarryLineNumbers) {
  const std::pair<std::string, std::string> cases[] = {
      {"mesh 2 1\n", "line 1"},
      {"polymesh 2 1\n3\n0 0 2\n1 0 2\n", "line"},
      {"polymesh 2 1\n3\n0 0 2\n1 0 2\n0 x 2\n1\n3 0 1 2\n", "line 5"},
      {"polymesh 2 1\n3\n0 0 2\n1 0 2\n0 1 7\n1\n3 0 1 2\n", "line 5"},
      {"polymesh 2 1\n3\n0 0 2\n1 0 2\n0 1 2\n1\n3 0 1 9\n", "line 7"},
      {"polymesh 2 1\n3\n0 0 2\n1 0 2\n0 1 2\n1\n3 0 1 2\nextra\n", "line 8"},
  };
  for (const auto& [text, where] : cases) {
    std::istringstream in(text);
    try {
      read_mesh(in);
      ADD_FAILURE() << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::ParseError) << text;
      EXPECT_NE(std::string(e.what()).find(where), std::string::npos) << e.what();
    }
  }
}

TEST(MeshIO, CommentsAndBlankLinesSkipped) {
  std::istringstream in("# header comment\npolymesh 2 1\n\n3\n0 0 2\n1 0 2\n0 1 2\n# elements\n1\n3 0 1 2\n");
  EXPECT_EQ(read_mesh(in).num_elements(), 1u);
}

TEST(Generators, PolygonalMeshIsValidAndSeeded) {
  const PolyMesh a = polygonal_mesh(6, 5, 0.35, 42, 0.4);
  const PolyMesh b = polygonal_mesh(6, 5, 0.35, 42, 0.4);
  const PolyMesh c = polygonal_mesh(6, 5, 0.35, 43, 0.4);
  EXPECT_NEAR(a.total_area(), 1.0, 1e-12);
  EXPECT_EQ(a.num_nodes(), b.num_nodes());
  for (std::size_t i = 0; i < a.num_nodes(); ++i) EXPECT_EQ(a.node(i).coords, b.node(i).coords);
  bool differs = false;
  for (std::size_t i = 0; i < a.num_nodes(); ++i) differs = differs || a.node(i).coords != c.node(i).coords;
  EXPECT_TRUE(differs);
  std::size_t hexagons = 0;
  for (const auto& e : a.elements()) hexagons += e.loop.size() == 6;
  EXPECT_GT(hexagons, 0u);
  EXPECT_THROW(polygonal_mesh(3, 3, 0.5, 1), Error);
}
