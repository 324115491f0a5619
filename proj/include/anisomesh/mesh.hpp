#pragma once

// Polytopal mesh topology. Hanging nodes are ordinary nodes: every node on an
// element boundary appears in that element's vertex loop, so patches are
// computed from loop membership alone.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "anisomesh/error.hpp"
#include "anisomesh/geometry.hpp"
#include "anisomesh/parallel.hpp"
#include "anisomesh/triangulation.hpp"

namespace anisomesh {

enum class BoundaryTag : int { interior = 0, neumann = 1, dirichlet = 2 };

struct MeshNode {
  Vec2 coords;
  BoundaryTag tag = BoundaryTag::interior;
};

struct MeshEdge {
  std::array<int, 2> nodes;
  /// One element for boundary edges, two for interior edges.
  std::vector<int> elements;
  BoundaryTag tag = BoundaryTag::interior;

  bool on_boundary() const { return elements.size() == 1; }
};

struct MeshElement {
  std::vector<int> loop;
  Polygon polygon;
  Moments moments;
  CovarianceSpectrum spectrum;
  ReferenceMap map;
  /// Fan from the reference-configuration kernel center, or ear clipping.
  Triangulation triangulation;
  /// edges[i] joins loop[i] and loop[i + 1].
  std::vector<int> edges;

  double area() const { return moments.area; }
  const Vec2& centroid() const { return moments.centroid; }
  double diameter() const { return polygon.diameter(); }
};

namespace detail {

inline MeshElement make_element(const std::vector<MeshNode>& nodes, const std::vector<int>& loop) {
  std::vector<Vec2> pts;
  pts.reserve(loop.size());
  for (int i : loop) pts.push_back(nodes[i].coords);
  if (!(signed_area(pts) > 0.0)) {
    throw Error(ErrorKind::InvalidTopology, "element loop is not counter-clockwise");
  }
  Polygon poly(std::move(pts));
  const Moments m = polygon_moments(poly);
  const CovarianceSpectrum s = spectrum_of(m.second_moment);
  const ReferenceMap map = reference_map(s, m.area);
  Triangulation tri = triangulate(poly, map);
  return MeshElement{loop, std::move(poly), m, s, map, std::move(tri), {}};
}

}  // namespace detail

class PolyMesh {
 public:
  PolyMesh(std::vector<MeshNode> nodes, const std::vector<std::vector<int>>& loops) : nodes_(std::move(nodes)) {
    for (std::size_t k = 0; k < loops.size(); ++k) check_loop(loops[k], k);
    std::vector<std::optional<MeshElement>> built(loops.size());
    parallel_for(loops.size(), [&](std::size_t k) { built[k].emplace(detail::make_element(nodes_, loops[k])); });
    elements_.reserve(loops.size());
    for (auto& e : built) elements_.push_back(std::move(*e));
    build_incidence();
    validate();
  }

  const std::vector<MeshNode>& nodes() const { return nodes_; }
  const std::vector<MeshEdge>& edges() const { return edges_; }
  const std::vector<MeshElement>& elements() const { return elements_; }
  const MeshNode& node(std::size_t i) const { return nodes_[i]; }
  const MeshEdge& edge(std::size_t i) const { return edges_[i]; }
  const MeshElement& element(std::size_t i) const { return elements_[i]; }
  std::size_t num_nodes() const { return nodes_.size(); }
  std::size_t num_edges() const { return edges_.size(); }
  std::size_t num_elements() const { return elements_.size(); }

  /// Elements whose closure contains node i (sorted).
  const std::vector<int>& node_patch(std::size_t i) const { return node_elements_[i]; }

  std::vector<int> edge_patch(std::size_t e) const {
    return merge({&node_elements_[edges_[e].nodes[0]], &node_elements_[edges_[e].nodes[1]]});
  }

  std::vector<int> element_patch(std::size_t k) const {
    std::vector<const std::vector<int>*> parts;
    for (int i : elements_[k].loop) parts.push_back(&node_elements_[i]);
    return merge(parts);
  }

  std::optional<int> find_edge(int a, int b) const {
    auto it = edge_index_.find(detail::edge_key(a, b));
    if (it == edge_index_.end()) return std::nullopt;
    return it->second;
  }

  /// Edges incident to node i.
  const std::vector<int>& node_edges(std::size_t i) const { return node_edges_[i]; }

  double total_area() const {
    double a = 0.0;
    for (const auto& e : elements_) a += e.area();
    return a;
  }

  /// |Omega| from the shoelace formula over the boundary edges.
  double domain_area() const {
    double a2 = 0.0;
    const Vec2 o = nodes_.empty() ? Vec2::Zero() : nodes_[0].coords;
    for (const auto& e : edges_) {
      if (!e.on_boundary()) continue;
      // Orientation of the edge inside its only element.
      const auto& loop = elements_[e.elements[0]].loop;
      int a = e.nodes[0], b = e.nodes[1];
      for (std::size_t i = 0; i < loop.size(); ++i) {
        if (loop[i] == b && loop[(i + 1) % loop.size()] == a) std::swap(a, b);
      }
      a2 += cross(nodes_[a].coords - o, nodes_[b].coords - o);
    }
    return 0.5 * a2;
  }

  /// Pairs (K1 < K2) of elements whose closures share at least one node.
  std::vector<std::array<int, 2>> neighbour_pairs() const {
    std::vector<std::array<int, 2>> out;
    for (std::size_t k = 0; k < elements_.size(); ++k) {
      for (int j : element_patch(k)) {
        if (j > static_cast<int>(k)) out.push_back({static_cast<int>(k), j});
      }
    }
    return out;
  }

  /// Maximum number of elements sharing a node.
  std::size_t max_node_valence() const {
    std::size_t m = 0;
    for (const auto& p : node_elements_) m = std::max(m, p.size());
    return m;
  }

  std::vector<std::vector<int>> loops() const {
    std::vector<std::vector<int>> out;
    out.reserve(elements_.size());
    for (const auto& e : elements_) out.push_back(e.loop);
    return out;
  }

  /// Full invariant check; throws InvalidTopology on the first violation.
  void validate() const {
    const double omega = domain_area();
    const double sum = total_area();
    if (!(std::abs(sum - omega) <= 1e-10 * std::abs(omega))) {
      throw Error(ErrorKind::InvalidTopology, "element areas do not sum to the domain area (overlap or gap)");
    }
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      const MeshEdge& ed = edges_[e];
      for (int k : ed.elements) {
        const auto& ids = elements_[k].edges;
        if (std::find(ids.begin(), ids.end(), static_cast<int>(e)) == ids.end()) {
          throw Error(ErrorKind::InvalidTopology, "edge/element incidence mismatch");
        }
      }
      if (ed.on_boundary()) {
        for (int v : ed.nodes) {
          if (nodes_[v].tag == BoundaryTag::interior) {
            throw Error(ErrorKind::InvalidTopology, "interior-tagged node " + std::to_string(v) + " on the boundary");
          }
        }
        const bool dir = nodes_[ed.nodes[0]].tag == BoundaryTag::dirichlet &&
                         nodes_[ed.nodes[1]].tag == BoundaryTag::dirichlet;
        if (ed.tag != (dir ? BoundaryTag::dirichlet : BoundaryTag::neumann)) {
          throw Error(ErrorKind::InvalidTopology, "boundary edge tag incompatible with its nodes");
        }
      }
    }
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (node_elements_[i].empty()) {
        throw Error(ErrorKind::InvalidTopology, "node " + std::to_string(i) + " belongs to no element");
      }
      if (nodes_[i].tag != BoundaryTag::interior) {
        bool touches = false;
        for (int e : node_edges_[i]) touches = touches || edges_[e].on_boundary();
        if (!touches) {
          throw Error(ErrorKind::InvalidTopology, "boundary-tagged node " + std::to_string(i) + " is interior");
        }
      }
    }
    // Conformity: no node may sit inside an edge without being in that edge's loops.
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      const Vec2 a = nodes_[edges_[e].nodes[0]].coords;
      const Vec2 b = nodes_[edges_[e].nodes[1]].coords;
      const Vec2 d = b - a;
      const double len2 = d.squaredNorm();
      const double tol = 1e-10 * std::sqrt(len2);
      for (int k : edge_patch(e)) {
        for (int v : elements_[k].loop) {
          if (v == edges_[e].nodes[0] || v == edges_[e].nodes[1]) continue;
          const Vec2 p = nodes_[v].coords - a;
          const double t = p.dot(d) / len2;
          if (t <= 0.0 || t >= 1.0) continue;
          if (std::abs(cross(d, p)) / std::sqrt(len2) <= tol) {
            throw Error(ErrorKind::InvalidTopology,
                        "node " + std::to_string(v) + " hangs on edge " + std::to_string(e) + " without being in its loop");
          }
        }
      }
    }
  }

 private:
  std::vector<MeshNode> nodes_;
  std::vector<MeshEdge> edges_;
  std::vector<MeshElement> elements_;
  std::vector<std::vector<int>> node_elements_;
  std::vector<std::vector<int>> node_edges_;
  std::unordered_map<std::uint64_t, int> edge_index_;

  void check_loop(const std::vector<int>& loop, std::size_t k) const {
    if (loop.size() < 3) throw Error(ErrorKind::InvalidTopology, "element " + std::to_string(k) + " has < 3 nodes");
    std::vector<int> sorted = loop;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw Error(ErrorKind::InvalidTopology, "element " + std::to_string(k) + " repeats a node");
    }
    for (int i : loop) {
      if (i < 0 || static_cast<std::size_t>(i) >= nodes_.size()) {
        throw Error(ErrorKind::InvalidTopology, "element " + std::to_string(k) + " references a missing node");
      }
    }
  }

  void build_incidence() {
    node_elements_.assign(nodes_.size(), {});
    node_edges_.assign(nodes_.size(), {});
    std::unordered_map<std::uint64_t, int> directed;
    for (std::size_t k = 0; k < elements_.size(); ++k) {
      auto& el = elements_[k];
      const std::size_t n = el.loop.size();
      el.edges.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        const int a = el.loop[i], b = el.loop[(i + 1) % n];
        node_elements_[a].push_back(static_cast<int>(k));
        const std::uint64_t dkey = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
                                   static_cast<std::uint32_t>(b);
        if (!directed.emplace(dkey, static_cast<int>(k)).second) {
          throw Error(ErrorKind::InvalidTopology, "edge traversed twice in the same direction (orientation mismatch)");
        }
        auto [it, inserted] = edge_index_.try_emplace(detail::edge_key(a, b), static_cast<int>(edges_.size()));
        if (inserted) {
          edges_.push_back(MeshEdge{{a, b}, {static_cast<int>(k)}, BoundaryTag::interior});
          node_edges_[a].push_back(it->second);
          node_edges_[b].push_back(it->second);
        } else {
          auto& els = edges_[it->second].elements;
          if (els.size() >= 2) throw Error(ErrorKind::InvalidTopology, "edge shared by more than two elements");
          els.push_back(static_cast<int>(k));
        }
        el.edges[i] = it->second;
      }
    }
    for (auto& p : node_elements_) {
      std::sort(p.begin(), p.end());
      p.erase(std::unique(p.begin(), p.end()), p.end());
    }
    for (auto& e : edges_) {
      if (!e.on_boundary()) continue;
      const bool dir =
          nodes_[e.nodes[0]].tag == BoundaryTag::dirichlet && nodes_[e.nodes[1]].tag == BoundaryTag::dirichlet;
      e.tag = dir ? BoundaryTag::dirichlet : BoundaryTag::neumann;
    }
  }

  static std::vector<int> merge(const std::vector<const std::vector<int>*>& parts) {
    std::vector<int> out;
    for (const auto* p : parts) out.insert(out.end(), p->begin(), p->end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }
};

/// How boundary nodes are tagged by build_mesh.
struct BoundarySpec {
  BoundaryTag default_tag = BoundaryTag::dirichlet;
  /// Optional per-node override, called with the coordinates of each boundary node.
  std::function<BoundaryTag(const Vec2&)> classify;
};

/// Builds a mesh from coordinates and loops; nodes on edges used by a single
/// element get boundary tags from `spec`, every other node is interior.
inline PolyMesh build_mesh(const std::vector<Vec2>& coords, const std::vector<std::vector<int>>& loops,
                           const BoundarySpec& spec = {}) {
  std::unordered_map<std::uint64_t, int> count;
  for (const auto& loop : loops) {
    for (std::size_t i = 0; i < loop.size(); ++i) ++count[detail::edge_key(loop[i], loop[(i + 1) % loop.size()])];
  }
  std::vector<MeshNode> nodes(coords.size());
  for (std::size_t i = 0; i < coords.size(); ++i) nodes[i].coords = coords[i];
  for (const auto& loop : loops) {
    for (std::size_t i = 0; i < loop.size(); ++i) {
      const int a = loop[i], b = loop[(i + 1) % loop.size()];
      if (count[detail::edge_key(a, b)] != 1) continue;
      for (int v : {a, b}) {
        if (v < 0 || static_cast<std::size_t>(v) >= nodes.size()) continue;
        nodes[v].tag = spec.classify ? spec.classify(coords[v]) : spec.default_tag;
        if (nodes[v].tag == BoundaryTag::interior) nodes[v].tag = spec.default_tag;
      }
    }
  }
  return PolyMesh(std::move(nodes), loops);
}

/// Structured nx-by-ny quadrilateral grid on the rectangle [x0,x1]x[y0,y1].
inline PolyMesh grid_mesh(int nx, int ny, const BoundarySpec& spec = {}, Vec2 lo = Vec2(0.0, 0.0),
                          Vec2 hi = Vec2(1.0, 1.0)) {
  if (nx < 1 || ny < 1) throw Error(ErrorKind::InvalidConfig, "grid needs at least one cell per direction");
  std::vector<Vec2> coords;
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      coords.emplace_back(lo.x() + (hi.x() - lo.x()) * i / nx, lo.y() + (hi.y() - lo.y()) * j / ny);
  std::vector<std::vector<int>> loops;
  auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) loops.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)});
  return build_mesh(coords, loops, spec);
}

}  // namespace anisomesh
