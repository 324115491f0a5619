#pragma once

// Exact polygon primitives: moments up to degree two, covariance spectra,
// the linear map onto the isotropic reference configuration and bisection of
// a polygon by a straight chord.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "anisomesh/error.hpp"

namespace anisomesh {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

inline double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

/// Counter-clockwise rotation by 90 degrees.
inline Vec2 perp(const Vec2& v) { return {-v.y(), v.x()}; }

namespace detail {

inline double orient(const Vec2& a, const Vec2& b, const Vec2& c) { return cross(b - a, c - a); }

inline bool on_segment(const Vec2& a, const Vec2& b, const Vec2& p) {
  return std::min(a.x(), b.x()) <= p.x() && p.x() <= std::max(a.x(), b.x()) &&
         std::min(a.y(), b.y()) <= p.y() && p.y() <= std::max(a.y(), b.y());
}

inline int sign(double v) { return (v > 0.0) - (v < 0.0); }

/// Closed segment intersection test.
inline bool segments_intersect(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  const int o1 = sign(orient(a, b, c));
  const int o2 = sign(orient(a, b, d));
  const int o3 = sign(orient(c, d, a));
  const int o4 = sign(orient(c, d, b));
  if (o1 * o2 < 0 && o3 * o4 < 0) return true;
  if (o1 == 0 && on_segment(a, b, c)) return true;
  if (o2 == 0 && on_segment(a, b, d)) return true;
  if (o3 == 0 && on_segment(c, d, a)) return true;
  if (o4 == 0 && on_segment(c, d, b)) return true;
  return false;
}

inline double signed_area(std::span<const Vec2> v) {
  const std::size_t n = v.size();
  if (n < 3) return 0.0;
  const Vec2 o = v[0];
  double a2 = 0.0;
  for (std::size_t i = 1; i + 1 < n; ++i) a2 += cross(v[i] - o, v[i + 1] - o);
  return 0.5 * a2;
}

inline bool is_simple(std::span<const Vec2> v) {
  const std::size_t n = v.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = v[i];
    const Vec2& b = v[(i + 1) % n];
    if (a == b) return false;
    // Adjacent edge folding back onto this one.
    const Vec2 e0 = b - a;
    const Vec2 e1 = v[(i + 2) % n] - b;
    if (cross(e0, e1) == 0.0 && e0.dot(e1) < 0.0) return false;
    for (std::size_t j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;
      if (segments_intersect(a, b, v[j], v[(j + 1) % n])) return false;
    }
  }
  return true;
}

}  // namespace detail

/// Simple polygon with counter-clockwise vertex order.
///
/// Clockwise input is reversed on construction. Collinear vertices (angle pi)
/// are kept: hanging nodes of a polytopal mesh are ordinary vertices.
class Polygon {
 public:
  explicit Polygon(std::vector<Vec2> vertices) : vertices_(std::move(vertices)) {
    if (vertices_.size() < 3) {
      throw Error(ErrorKind::InvalidPolygon, "polygon needs at least 3 vertices");
    }
    for (const Vec2& v : vertices_) {
      if (!std::isfinite(v.x()) || !std::isfinite(v.y())) {
        throw Error(ErrorKind::InvalidPolygon, "non-finite vertex coordinate");
      }
    }
    double a = detail::signed_area(vertices_);
    if (a < 0.0) {
      std::reverse(vertices_.begin(), vertices_.end());
      a = -a;
    }
    if (!(a > 0.0)) throw Error(ErrorKind::DegenerateElement, "polygon has zero area");
    if (!detail::is_simple(vertices_)) {
      throw Error(ErrorKind::InvalidPolygon, "polygon boundary is not simple");
    }
    area_ = a;
  }

  const std::vector<Vec2>& vertices() const noexcept { return vertices_; }
  std::size_t size() const noexcept { return vertices_.size(); }
  const Vec2& operator[](std::size_t i) const { return vertices_[i]; }
  const Vec2& vertex(std::size_t i) const { return vertices_[i % vertices_.size()]; }

  double area() const noexcept { return area_; }

  double diameter() const {
    double d2 = 0.0;
    for (std::size_t i = 0; i < vertices_.size(); ++i)
      for (std::size_t j = i + 1; j < vertices_.size(); ++j)
        d2 = std::max(d2, (vertices_[i] - vertices_[j]).squaredNorm());
    return std::sqrt(d2);
  }

  std::pair<Vec2, Vec2> bounding_box() const {
    Vec2 lo = vertices_[0], hi = vertices_[0];
    for (const Vec2& v : vertices_) {
      lo = lo.cwiseMin(v);
      hi = hi.cwiseMax(v);
    }
    return {lo, hi};
  }

  /// Crossing-number point test; points exactly on the boundary may go either way.
  bool contains(const Vec2& p) const {
    bool inside = false;
    const std::size_t n = vertices_.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
      const Vec2& a = vertices_[i];
      const Vec2& b = vertices_[j];
      if ((a.y() > p.y()) != (b.y() > p.y())) {
        const double x = a.x() + (p.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
        if (p.x() < x) inside = !inside;
      }
    }
    return inside;
  }

  /// Distance from p to the closest boundary edge.
  double boundary_distance(const Vec2& p) const {
    double best = std::numeric_limits<double>::infinity();
    const std::size_t n = vertices_.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2& a = vertices_[i];
      const Vec2 e = vertex(i + 1) - a;
      const double t = std::clamp((p - a).dot(e) / e.squaredNorm(), 0.0, 1.0);
      best = std::min(best, (a + t * e - p).norm());
    }
    return best;
  }

 private:
  std::vector<Vec2> vertices_;
  double area_ = 0.0;
};

struct Moments {
  double area;
  Vec2 centroid;
  /// (1/|K|) * integral of (x - centroid)(x - centroid)^T.
  Mat2 second_moment;
};

/// Area, centroid and covariance by exact boundary integration.
inline Moments polygon_moments(const Polygon& poly) {
  const auto& v = poly.vertices();
  const std::size_t n = v.size();
  const double h = poly.diameter();

  const Vec2 origin = v[0];
  double a2 = 0.0;
  Vec2 c = Vec2::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 p0 = v[i] - origin;
    const Vec2 p1 = v[(i + 1) % n] - origin;
    const double w = cross(p0, p1);
    a2 += w;
    c += (p0 + p1) * w;
  }
  const double area = 0.5 * a2;
  if (!(area > 1e-14 * h * h)) {
    throw Error(ErrorKind::DegenerateElement, "element area below 1e-14 h^2");
  }
  const Vec2 centroid = origin + c / (3.0 * a2);

  // Second pass about the centroid keeps thin, far-from-origin elements accurate.
  double sx = 0.0, sy = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 q0 = v[i] - centroid;
    const Vec2 q1 = v[(i + 1) % n] - centroid;
    const double w = cross(q0, q1);
    sx += (q0.x() + q1.x()) * w;
    sy += (q0.y() + q1.y()) * w;
    sxx += (q0.x() * q0.x() + q0.x() * q1.x() + q1.x() * q1.x()) * w;
    syy += (q0.y() * q0.y() + q0.y() * q1.y() + q1.y() * q1.y()) * w;
    sxy += (q0.x() * q1.y() + 2.0 * q0.x() * q0.y() + 2.0 * q1.x() * q1.y() + q1.x() * q0.y()) * w;
  }
  const Vec2 m(sx / (6.0 * area), sy / (6.0 * area));
  Mat2 M;
  M(0, 0) = sxx / (12.0 * area) - m.x() * m.x();
  M(1, 1) = syy / (12.0 * area) - m.y() * m.y();
  M(0, 1) = M(1, 0) = sxy / (24.0 * area) - m.x() * m.y();
  return {area, centroid + m, M};
}

/// Eigen decomposition of a symmetric 2x2 matrix, largest eigenvalue first.
struct SymmetricEigen2 {
  double lambda1;
  double lambda2;
  Vec2 u1;
  Vec2 u2;
  bool tie;  // eigenvalue gap below the tie tolerance; u1 is the x-axis
};

/// Closed-form decomposition with a canonical orientation: the first nonzero
/// component of u1 is positive and u2 = perp(u1). A gap below
/// `tie_tolerance * trace` selects u1 = (1, 0).
inline SymmetricEigen2 symmetric_eigen(const Mat2& matrix, double tie_tolerance = 1e-12) {
  const double a = matrix(0, 0);
  const double c = matrix(1, 1);
  const double b = 0.5 * (matrix(0, 1) + matrix(1, 0));
  const double mean = 0.5 * (a + c);
  const double gap = std::hypot(0.5 * (a - c), b);
  SymmetricEigen2 out{};
  out.lambda1 = mean + gap;
  const double det = std::fma(a, c, -b * b);
  // det / lambda1 avoids the cancellation in mean - gap for thin elements.
  out.lambda2 = out.lambda1 > 0.0 ? det / out.lambda1 : mean - gap;
  const double scale = std::abs(a) + std::abs(c);
  if (2.0 * gap <= tie_tolerance * scale || gap == 0.0) {
    out.tie = true;
    out.u1 = Vec2(1.0, 0.0);
  } else {
    out.tie = false;
    const Vec2 r0(out.lambda1 - c, b);
    const Vec2 r1(b, out.lambda1 - a);
    out.u1 = (r0.squaredNorm() >= r1.squaredNorm() ? r0 : r1).normalized();
    const bool flip = std::abs(out.u1.x()) > 1e-14 ? out.u1.x() < 0.0 : out.u1.y() < 0.0;
    if (flip) out.u1 = -out.u1;
  }
  out.u2 = perp(out.u1);
  return out;
}

struct CovarianceSpectrum {
  double lambda1;
  double lambda2;
  Vec2 u1;
  Vec2 u2;
  Mat2 covariance;

  double anisotropy_ratio() const { return lambda1 / lambda2; }
  /// Columns u1, u2.
  Mat2 eigenvectors() const {
    Mat2 U;
    U.col(0) = u1;
    U.col(1) = u2;
    return U;
  }
};

inline CovarianceSpectrum spectrum_of(const Mat2& covariance) {
  const SymmetricEigen2 e = symmetric_eigen(covariance);
  if (!(e.lambda2 > 1e-14 * e.lambda1)) {
    throw Error(ErrorKind::DegenerateElement, "covariance is numerically rank deficient");
  }
  return {e.lambda1, e.lambda2, e.u1, e.u2, covariance};
}

inline CovarianceSpectrum covariance_spectrum(const Polygon& poly) {
  return spectrum_of(polygon_moments(poly).second_moment);
}

/// x -> A x with A = alpha * Lambda^{-1/2} U^T; alpha normalises the mapped area to one.
struct ReferenceMap {
  Mat2 matrix;
  double alpha;
  Mat2 inverse;

  Vec2 apply(const Vec2& x) const { return matrix * x; }
  /// A^{-T}, the operator that maps physical gradients to reference gradients.
  Mat2 inverse_transpose() const { return inverse.transpose(); }
};

inline ReferenceMap reference_map(const CovarianceSpectrum& s, double area) {
  const double alpha = std::sqrt(std::sqrt(s.lambda1 * s.lambda2) / area);
  const Mat2 U = s.eigenvectors();
  const Mat2 scale_inv = Eigen::Vector2d(1.0 / std::sqrt(s.lambda1), 1.0 / std::sqrt(s.lambda2)).asDiagonal();
  const Mat2 scale = Eigen::Vector2d(std::sqrt(s.lambda1), std::sqrt(s.lambda2)).asDiagonal();
  return {alpha * scale_inv * U.transpose(), alpha, (U * scale) / alpha};
}

inline ReferenceMap reference_map(const Polygon& poly) {
  const Moments m = polygon_moments(poly);
  return reference_map(spectrum_of(m.second_moment), m.area);
}

/// Applies x -> A x vertex-wise; A must have positive determinant.
inline Polygon map_polygon(const Polygon& poly, const Mat2& A) {
  std::vector<Vec2> out;
  out.reserve(poly.size());
  for (const Vec2& v : poly.vertices()) out.push_back(A * v);
  return Polygon(std::move(out));
}

inline Polygon map_polygon(const Polygon& poly, const ReferenceMap& map) {
  return map_polygon(poly, map.matrix);
}

/// Where a cut chord meets the polygon boundary.
struct BoundaryHit {
  Vec2 point;
  /// Edge index i (edge from vertex i to vertex i+1) carrying the hit.
  std::size_t edge;
  /// Set when the hit was snapped onto an existing vertex.
  std::optional<std::size_t> vertex;
};

struct PolygonSplit {
  /// Piece on the left of the cut direction, then the piece on the right.
  std::array<Polygon, 2> pieces;
  /// cut[0] lies behind the anchor along the direction, cut[1] ahead of it.
  std::array<BoundaryHit, 2> cut;
  /// Vertex loops of the pieces as indices into the input polygon; kCutStart
  /// and kCutEnd stand for cut[0] and cut[1] when those are not vertices.
  std::array<std::vector<std::ptrdiff_t>, 2> loops;

  static constexpr std::ptrdiff_t kCutStart = -1;
  static constexpr std::ptrdiff_t kCutEnd = -2;
};

/// Bisects `poly` along the line through `anchor` with direction `direction`.
///
/// Boundary crossings are sorted along the line and the interior interval
/// containing the anchor is used; for an anchor outside the polygon the
/// midpoint of the longest interior interval is used instead. Crossings within
/// snap_tolerance * h_K of a vertex snap onto it.
inline PolygonSplit split_polygon_by_line(const Polygon& poly, const Vec2& anchor, const Vec2& direction,
                                          double snap_tolerance = 1e-9) {
  const auto& v = poly.vertices();
  const std::size_t n = v.size();
  const double h = poly.diameter();
  const double tol = snap_tolerance * h;
  const double dn = direction.norm();
  if (!(dn > 0.0)) throw Error(ErrorKind::CutMissesPolygon, "zero cut direction");
  const Vec2 d = direction / dn;

  struct Stop {
    double t;
    BoundaryHit hit;
  };
  std::vector<Stop> stops;
  std::vector<double> s(n);
  std::vector<bool> on_line(n);
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = cross(d, v[i] - anchor);
    on_line[i] = std::abs(s[i]) <= tol;
    if (on_line[i]) stops.push_back({d.dot(v[i] - anchor), {v[i], i, i}});
  }
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = (i + 1) % n;
    if (on_line[i] || on_line[j] || s[i] * s[j] >= 0.0) continue;
    const double lam = s[i] / (s[i] - s[j]);
    const Vec2 q = v[i] + lam * (v[j] - v[i]);
    stops.push_back({d.dot(q - anchor), {q, i, std::nullopt}});
  }
  std::sort(stops.begin(), stops.end(), [](const Stop& a, const Stop& b) { return a.t < b.t; });

  const Stop* lo = nullptr;
  const Stop* hi = nullptr;
  if (poly.contains(anchor) && poly.boundary_distance(anchor) > tol) {
    for (const Stop& st : stops) {
      if (st.t < 0.0) lo = &st;
      if (st.t > 0.0 && hi == nullptr) hi = &st;
    }
  } else {
    double best = 0.0;
    for (std::size_t k = 0; k + 1 < stops.size(); ++k) {
      const double len = stops[k + 1].t - stops[k].t;
      if (len <= tol) continue;
      const Vec2 mid = anchor + 0.5 * (stops[k].t + stops[k + 1].t) * d;
      if (len > best && poly.contains(mid)) {
        best = len;
        lo = &stops[k];
        hi = &stops[k + 1];
      }
    }
  }
  if (lo == nullptr || hi == nullptr || hi->t - lo->t <= tol) {
    throw Error(ErrorKind::CutMissesPolygon, "cut line does not cross the polygon interior");
  }
  const BoundaryHit a = lo->hit;
  const BoundaryHit b = hi->hit;
  if (a.vertex && b.vertex) {
    const std::size_t va = *a.vertex, vb = *b.vertex;
    if ((va + 1) % n == vb || (vb + 1) % n == va) {
      throw Error(ErrorKind::CutMissesPolygon, "cut runs along a polygon edge");
    }
  }

  // Walk the boundary counter-clockwise from `from` to `to`, closing along the chord.
  auto walk = [&](const BoundaryHit& from, std::ptrdiff_t from_marker, const BoundaryHit& to,
                  std::ptrdiff_t to_marker) {
    std::vector<std::ptrdiff_t> loop;
    loop.push_back(from.vertex ? static_cast<std::ptrdiff_t>(*from.vertex) : from_marker);
    std::size_t idx = from.vertex ? (*from.vertex + 1) % n : (from.edge + 1) % n;
    for (std::size_t steps = 0; steps <= n; ++steps) {
      if (to.vertex && idx == *to.vertex) {
        loop.push_back(static_cast<std::ptrdiff_t>(idx));
        return loop;
      }
      loop.push_back(static_cast<std::ptrdiff_t>(idx));
      if (!to.vertex && idx == to.edge) {
        loop.push_back(to_marker);
        return loop;
      }
      idx = (idx + 1) % n;
    }
    throw Error(ErrorKind::CutMissesPolygon, "cut endpoints are not separated along the boundary");
  };

  std::array<std::vector<std::ptrdiff_t>, 2> loops = {walk(b, PolygonSplit::kCutEnd, a, PolygonSplit::kCutStart),
                                                     walk(a, PolygonSplit::kCutStart, b, PolygonSplit::kCutEnd)};
  auto resolve = [&](std::ptrdiff_t idx) -> Vec2 {
    if (idx == PolygonSplit::kCutStart) return a.point;
    if (idx == PolygonSplit::kCutEnd) return b.point;
    return v[static_cast<std::size_t>(idx)];
  };
  std::array<std::vector<Vec2>, 2> coords;
  for (int k = 0; k < 2; ++k) {
    if (loops[k].size() < 3) throw Error(ErrorKind::CutMissesPolygon, "cut leaves a degenerate piece");
    for (std::ptrdiff_t idx : loops[k]) coords[k].push_back(resolve(idx));
    if (!(detail::signed_area(coords[k]) > 0.0) || !detail::is_simple(coords[k])) {
      throw Error(ErrorKind::NonSimpleResult, "bisection produced an invalid piece");
    }
  }
  PolygonSplit out{{Polygon(std::move(coords[0])), Polygon(std::move(coords[1]))}, {a, b}, std::move(loops)};
  const double total = out.pieces[0].area() + out.pieces[1].area();
  if (std::abs(total - poly.area()) > 1e-10 * poly.area()) {
    throw Error(ErrorKind::NonSimpleResult, "piece areas do not sum to the parent area");
  }
  return out;
}

}  // namespace anisomesh
