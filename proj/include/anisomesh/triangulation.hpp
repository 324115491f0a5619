#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <utility>
#include <vector>

#include "anisomesh/geometry.hpp"
#include "anisomesh/kernel.hpp"

namespace anisomesh {

/// Triangulation of a polygon. The first `boundary_count` points are the
/// polygon vertices in order; any further point is interior.
struct Triangulation {
  std::vector<Vec2> points;
  std::vector<std::array<int, 3>> triangles;
  std::size_t boundary_count = 0;
};

/// Ear clipping; collinear (angle pi) vertices are never clipped as ears.
inline Triangulation ear_clip(const Polygon& poly) {
  const std::size_t n = poly.size();
  Triangulation t;
  t.points = poly.vertices();
  t.boundary_count = n;
  std::vector<int> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = static_cast<int>(i);
  const double h = poly.diameter();
  const double eps = 1e-14 * h * h;
  while (idx.size() > 3) {
    bool clipped = false;
    const std::size_t m = idx.size();
    for (std::size_t k = 0; k < m && !clipped; ++k) {
      const int ia = idx[(k + m - 1) % m], ib = idx[k], ic = idx[(k + 1) % m];
      const Vec2 &a = t.points[ia], &b = t.points[ib], &c = t.points[ic];
      if (detail::orient(a, b, c) <= eps) continue;
      bool empty = true;
      for (std::size_t j = 0; j < m && empty; ++j) {
        const int ip = idx[j];
        if (ip == ia || ip == ib || ip == ic) continue;
        const Vec2& p = t.points[ip];
        // Points on or within roundoff of the diagonal block the ear too.
        if (detail::orient(a, b, p) >= -eps && detail::orient(b, c, p) >= -eps && detail::orient(c, a, p) >= -eps) {
          empty = false;
        }
      }
      if (!empty) continue;
      t.triangles.push_back({ia, ib, ic});
      idx.erase(idx.begin() + static_cast<std::ptrdiff_t>(k));
      clipped = true;
    }
    if (!clipped) throw Error(ErrorKind::TriangulationFailed, "no ear found; polygon is not simple");
  }
  if (detail::orient(t.points[idx[0]], t.points[idx[1]], t.points[idx[2]]) <= eps) {
    throw Error(ErrorKind::TriangulationFailed, "degenerate final ear");
  }
  t.triangles.push_back({idx[0], idx[1], idx[2]});
  return t;
}

/// Fan from a kernel point, falling back to ear clipping when the polygon is
/// not star-shaped. The fan center is the Chebyshev center of the kernel of
/// the reference configuration, mapped back, so that fan triangles are well
/// shaped relative to the element's own anisotropy.
inline Triangulation triangulate(const Polygon& poly, const ReferenceMap& map) {
  const Polygon mapped = map_polygon(poly, map);
  const StarKernel k = star_kernel(mapped);
  if (!(k.rho > 1e-10 * mapped.diameter())) return ear_clip(poly);
  Triangulation t;
  const std::size_t n = poly.size();
  t.points = poly.vertices();
  t.points.push_back(map.inverse * k.center);
  t.boundary_count = n;
  const int c = static_cast<int>(n);
  for (std::size_t i = 0; i < n; ++i) {
    t.triangles.push_back({c, static_cast<int>(i), static_cast<int>((i + 1) % n)});
  }
  return t;
}

inline Triangulation triangulate(const Polygon& poly) { return triangulate(poly, reference_map(poly)); }

/// Conforming refinement of a polygon triangulation used for discrete
/// harmonic functions. Boundary nodes carry their position on the polygon
/// boundary: edge index and parameter t in [0, 1).
struct SubTriangulation {
  std::vector<Vec2> nodes;
  std::vector<std::array<int, 3>> triangles;
  std::vector<int> boundary_edge;   // -1 for interior nodes
  std::vector<double> boundary_t;

  bool on_boundary(std::size_t i) const { return boundary_edge[i] >= 0; }
};

namespace detail {

inline std::uint64_t edge_key(int a, int b) {
  const auto lo = static_cast<std::uint32_t>(std::min(a, b));
  const auto hi = static_cast<std::uint32_t>(std::max(a, b));
  return (static_cast<std::uint64_t>(lo) << 32) | hi;
}

inline double cot_at(const Vec2& apex, const Vec2& a, const Vec2& b) {
  const Vec2 u = a - apex;
  const Vec2 v = b - apex;
  return u.dot(v) / std::abs(cross(u, v));
}

/// Lawson flips until every interior edge is locally Delaunay
/// (opposite angles summing to at most pi). Boundary edges are fixed.
inline void make_delaunay(const std::vector<Vec2>& pts, std::vector<std::array<int, 3>>& tris) {
  std::unordered_map<std::uint64_t, std::array<int, 2>> adj;
  adj.reserve(tris.size() * 2);
  for (int t = 0; t < static_cast<int>(tris.size()); ++t) {
    for (int e = 0; e < 3; ++e) {
      auto [it, inserted] = adj.try_emplace(edge_key(tris[t][e], tris[t][(e + 1) % 3]), std::array<int, 2>{t, -1});
      if (!inserted) it->second[1] = t;
    }
  }
  std::vector<std::pair<int, int>> stack;
  for (const auto& [key, ts] : adj) {
    if (ts[1] >= 0) stack.emplace_back(static_cast<int>(key >> 32), static_cast<int>(key & 0xffffffffu));
  }
  auto opposite = [&](int t, int a, int b) {
    for (int v : tris[t])
      if (v != a && v != b) return v;
    return -1;
  };
  auto replace_adj = [&](int a, int b, int from, int to) {
    auto& ts = adj[edge_key(a, b)];
    if (ts[0] == from) ts[0] = to;
    else if (ts[1] == from) ts[1] = to;
  };
  std::size_t guard = 0;
  const std::size_t max_flips = 64 * tris.size() + 64;
  while (!stack.empty()) {
    auto [p, q] = stack.back();
    stack.pop_back();
    auto it = adj.find(edge_key(p, q));
    if (it == adj.end() || it->second[1] < 0) continue;
    int t1 = it->second[0], t2 = it->second[1];
    // Orient so that t1 contains the directed edge a->b.
    int a = p, b = q;
    {
      const auto& tr = tris[t1];
      bool forward = false;
      for (int e = 0; e < 3; ++e) forward = forward || (tr[e] == a && tr[(e + 1) % 3] == b);
      if (!forward) std::swap(a, b);
    }
    const int c = opposite(t1, a, b);
    const int d = opposite(t2, a, b);
    if (cot_at(pts[c], pts[a], pts[b]) + cot_at(pts[d], pts[a], pts[b]) >= -1e-12) continue;
    if (++guard > max_flips) break;
    tris[t1] = {a, d, c};
    tris[t2] = {d, b, c};
    adj.erase(it);
    adj[edge_key(c, d)] = {t1, t2};
    replace_adj(a, d, t2, t1);
    replace_adj(b, c, t1, t2);
    stack.emplace_back(a, d);
    stack.emplace_back(d, b);
    stack.emplace_back(b, c);
    stack.emplace_back(c, a);
  }
}

}  // namespace detail

/// Uniform red refinement of `base` applied `depth` times followed by Lawson
/// flips to a constrained Delaunay triangulation, which makes the P1
/// stiffness matrix an M-matrix.
inline SubTriangulation refine_triangulation(const Triangulation& base, int depth) {
  SubTriangulation s;
  s.nodes = base.points;
  s.triangles = base.triangles;
  const int n = static_cast<int>(base.boundary_count);
  s.boundary_edge.assign(s.nodes.size(), -1);
  s.boundary_t.assign(s.nodes.size(), 0.0);
  // Directed boundary edges, following the counter-clockwise boundary.
  std::vector<std::pair<int, int>> boundary;
  for (int i = 0; i < n; ++i) {
    s.boundary_edge[i] = i;
    boundary.emplace_back(i, (i + 1) % n);
  }
  for (int level = 0; level < depth; ++level) {
    std::unordered_map<std::uint64_t, int> mid;
    mid.reserve(s.triangles.size() * 2);
    auto midpoint = [&](int a, int b) {
      auto [it, inserted] = mid.try_emplace(detail::edge_key(a, b), static_cast<int>(s.nodes.size()));
      if (inserted) {
        s.nodes.push_back(0.5 * (s.nodes[a] + s.nodes[b]));
        s.boundary_edge.push_back(-1);
        s.boundary_t.push_back(0.0);
      }
      return it->second;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(s.triangles.size() * 4);
    for (const auto& t : s.triangles) {
      const int ab = midpoint(t[0], t[1]);
      const int bc = midpoint(t[1], t[2]);
      const int ca = midpoint(t[2], t[0]);
      next.push_back({t[0], ab, ca});
      next.push_back({ab, t[1], bc});
      next.push_back({ca, bc, t[2]});
      next.push_back({ab, bc, ca});
    }
    s.triangles = std::move(next);
    std::vector<std::pair<int, int>> refined;
    refined.reserve(boundary.size() * 2);
    for (auto [a, b] : boundary) {
      const int m = mid.at(detail::edge_key(a, b));
      const int ka = s.boundary_edge[a];
      const double tb = (s.boundary_edge[b] == ka) ? s.boundary_t[b] : 1.0;
      s.boundary_edge[m] = ka;
      s.boundary_t[m] = 0.5 * (s.boundary_t[a] + tb);
      refined.emplace_back(a, m);
      refined.emplace_back(m, b);
    }
    boundary = std::move(refined);
  }
  detail::make_delaunay(s.nodes, s.triangles);
  return s;
}

}  // namespace anisomesh
