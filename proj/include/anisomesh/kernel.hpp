#pragma once

#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "anisomesh/geometry.hpp"

namespace anisomesh {

/// Kernel of a polygon (points that see the whole boundary) and the largest
/// circle inside it.
struct StarKernel {
  /// Convex kernel vertices, counter-clockwise; empty if not star-shaped.
  std::vector<Vec2> vertices;
  /// Chebyshev radius of the kernel; zero iff the polygon is not star-shaped.
  double rho = 0.0;
  /// Chebyshev center of the kernel.
  Vec2 center = Vec2::Zero();

  bool star_shaped() const { return rho > 0.0; }
};

namespace detail {

struct HalfPlane {
  Vec2 normal;  // unit, pointing inside
  double offset;  // inside: normal . x >= offset
};

inline std::vector<HalfPlane> edge_half_planes(const Polygon& poly) {
  std::vector<HalfPlane> planes;
  const double h = poly.diameter();
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2 a = poly[i];
    const Vec2 e = poly.vertex(i + 1) - a;
    const Vec2 nrm = perp(e).normalized();
    const double off = nrm.dot(a);
    bool duplicate = false;
    for (const HalfPlane& hp : planes) {
      if ((hp.normal - nrm).norm() < 1e-12 && std::abs(hp.offset - off) < 1e-12 * h) {
        duplicate = true;
        break;
      }
    }
    if (!duplicate) planes.push_back({nrm, off});
  }
  return planes;
}

inline std::vector<Vec2> clip(const std::vector<Vec2>& poly, const HalfPlane& hp) {
  std::vector<Vec2> out;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % n];
    const double dp = hp.normal.dot(p) - hp.offset;
    const double dq = hp.normal.dot(q) - hp.offset;
    if (dp >= 0.0) out.push_back(p);
    if ((dp >= 0.0) != (dq >= 0.0)) {
      const double t = dp / (dp - dq);
      out.push_back(p + t * (q - p));
    }
  }
  return out;
}

}  // namespace detail

inline StarKernel star_kernel(const Polygon& poly) {
  const auto [lo, hi] = poly.bounding_box();
  const double h = poly.diameter();
  const Vec2 pad = Vec2::Constant(h);
  std::vector<Vec2> k = {lo - pad, Vec2(hi.x() + h, lo.y() - h), hi + pad, Vec2(lo.x() - h, hi.y() + h)};
  const auto planes = detail::edge_half_planes(poly);
  for (const auto& hp : planes) {
    k = detail::clip(k, hp);
    if (k.size() < 3) return {};
  }
  if (!(detail::signed_area(k) > 1e-14 * h * h)) return {};

  // max r s.t. normal_i . z - r >= offset_i, by enumerating vertices of the 3D LP.
  std::vector<std::pair<double, Vec2>> candidates;
  const std::size_t m = planes.size();
  const double tol = 1e-12 * h;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      for (std::size_t l = j + 1; l < m; ++l) {
        Eigen::Matrix3d A;
        Eigen::Vector3d b;
        const std::size_t idx[3] = {i, j, l};
        for (int r = 0; r < 3; ++r) {
          A(r, 0) = planes[idx[r]].normal.x();
          A(r, 1) = planes[idx[r]].normal.y();
          A(r, 2) = -1.0;
          b(r) = planes[idx[r]].offset;
        }
        Eigen::FullPivLU<Eigen::Matrix3d> lu(A);
        if (!lu.isInvertible()) continue;
        const Eigen::Vector3d x = lu.solve(b);
        const Vec2 z(x(0), x(1));
        const double r = x(2);
        if (r <= 0.0) continue;
        bool feasible = true;
        for (const auto& hp : planes) {
          if (hp.normal.dot(z) - hp.offset < r - tol) {
            feasible = false;
            break;
          }
        }
        if (feasible) candidates.emplace_back(r, z);
      }
    }
  }
  if (candidates.empty()) return {};
  double best = 0.0;
  for (const auto& c : candidates) best = std::max(best, c.first);
  std::vector<Vec2> optimal;
  for (const auto& [r, z] : candidates) {
    if (r < best - tol) continue;
    bool seen = false;
    for (const Vec2& o : optimal) seen = seen || (o - z).norm() <= tol;
    if (!seen) optimal.push_back(z);
  }
  Vec2 acc = Vec2::Zero();
  for (const Vec2& z : optimal) acc += z;
  StarKernel out;
  out.vertices = std::move(k);
  out.rho = best;
  // Average of optimal vertices: the midpoint of a degenerate optimal face.
  out.center = acc / static_cast<double>(optimal.size());
  return out;
}

}  // namespace anisomesh
