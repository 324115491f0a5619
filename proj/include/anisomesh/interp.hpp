#pragma once

// Harmonic nodal basis per element: each basis function is the discrete
// harmonic extension (P1 Galerkin on a refined sub-triangulation) of the
// piecewise-linear hat data on the element boundary.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <mutex>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "anisomesh/error.hpp"
#include "anisomesh/fields.hpp"
#include "anisomesh/indicator.hpp"
#include "anisomesh/mesh.hpp"
#include "anisomesh/parallel.hpp"
#include "anisomesh/triangulation.hpp"

namespace anisomesh {

struct LocalHarmonicBasis {
  SubTriangulation sub;
  /// values(s, i): basis function of loop position i at sub-node s.
  Eigen::MatrixXd values;
};

/// Sub-triangulation depth: `requested` if non-negative, otherwise
/// max(3, ceil(log2(lambda1/lambda2) / 2)) capped at `cap`.
inline int basis_depth_for(const CovarianceSpectrum& s, int requested, int cap = 5) {
  if (requested >= 0) return requested;
  const int want = static_cast<int>(std::ceil(0.5 * std::log2(s.anisotropy_ratio())));
  return std::clamp(want, 3, std::max(3, cap));
}

inline LocalHarmonicBasis build_basis(const Triangulation& tri, int depth) {
  LocalHarmonicBasis b;
  b.sub = refine_triangulation(tri, depth);
  const auto& sub = b.sub;
  const int n_loop = static_cast<int>(tri.boundary_count);
  const int n = static_cast<int>(sub.nodes.size());

  std::vector<int> unknown(n, -1);
  int n_in = 0;
  for (int s = 0; s < n; ++s)
    if (!sub.on_boundary(s)) unknown[s] = n_in++;

  b.values = Eigen::MatrixXd::Zero(n, n_loop);
  for (int s = 0; s < n; ++s) {
    if (!sub.on_boundary(s)) continue;
    const int e = sub.boundary_edge[s];
    const double t = sub.boundary_t[s];
    b.values(s, e) += 1.0 - t;
    b.values(s, (e + 1) % n_loop) += t;
  }
  if (n_in == 0) return b;

  std::vector<Eigen::Triplet<double>> kii;
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n_in, n_loop);
  for (const auto& t : sub.triangles) {
    const Vec2& p0 = sub.nodes[t[0]];
    const Vec2& p1 = sub.nodes[t[1]];
    const Vec2& p2 = sub.nodes[t[2]];
    const double area2 = std::abs(cross(p1 - p0, p2 - p0));
    if (!(area2 > 0.0)) throw Error(ErrorKind::SolveFailed, "degenerate sub-triangle");
    // Gradients of the barycentric coordinates times 2|T|.
    const std::array<Vec2, 3> g = {perp(p2 - p1), perp(p0 - p2), perp(p1 - p0)};
    for (int i = 0; i < 3; ++i) {
      const int ui = unknown[t[i]];
      if (ui < 0) continue;
      for (int j = 0; j < 3; ++j) {
        const double k = g[i].dot(g[j]) / (2.0 * area2);
        const int uj = unknown[t[j]];
        if (uj >= 0) kii.emplace_back(ui, uj, k);
        else rhs.row(ui) -= k * b.values.row(t[j]);
      }
    }
  }
  Eigen::SparseMatrix<double> K(n_in, n_in);
  K.setFromTriplets(kii.begin(), kii.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(K);
  if (solver.info() != Eigen::Success) throw Error(ErrorKind::SolveFailed, "stiffness factorization failed");
  const Eigen::MatrixXd x = solver.solve(rhs);
  if (solver.info() != Eigen::Success || !x.allFinite()) throw Error(ErrorKind::SolveFailed, "harmonic solve failed");
  for (int s = 0; s < n; ++s)
    if (unknown[s] >= 0) b.values.row(s) = x.row(unknown[s]);
  return b;
}

inline LocalHarmonicBasis build_basis(const MeshElement& el, int depth = 3) {
  return build_basis(el.triangulation, basis_depth_for(el.spectrum, depth));
}

/// Bases keyed by the exact element geometry, so elements untouched by a
/// refinement step are not solved again.
class BasisCache {
 public:
  explicit BasisCache(std::size_t capacity = 50000) : capacity_(capacity) {}

  std::shared_ptr<const LocalHarmonicBasis> get(const MeshElement& el, int depth) {
    Key key{basis_depth_for(el.spectrum, depth), {}};
    for (const Vec2& p : el.polygon.vertices()) {
      key.coords.push_back(p.x());
      key.coords.push_back(p.y());
    }
    {
      std::lock_guard lock(mutex_);
      if (auto it = map_.find(key); it != map_.end()) {
        ++hits_;
        return it->second;
      }
    }
    auto basis = std::make_shared<const LocalHarmonicBasis>(build_basis(el.triangulation, key.depth));
    std::lock_guard lock(mutex_);
    if (map_.size() >= capacity_) map_.clear();
    ++misses_;
    map_.emplace(std::move(key), basis);
    return basis;
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return map_.size();
  }
  std::size_t hits() const { return hits_; }
  std::size_t misses() const { return misses_; }

 private:
  struct Key {
    int depth;
    std::vector<double> coords;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const {
      std::uint64_t h = 1469598103934665603ull ^ static_cast<std::uint64_t>(k.depth);
      for (double c : k.coords) {
        h ^= std::bit_cast<std::uint64_t>(c);
        h *= 1099511628211ull;
      }
      return static_cast<std::size_t>(h);
    }
  };
  std::size_t capacity_;
  mutable std::mutex mutex_;
  std::unordered_map<Key, std::shared_ptr<const LocalHarmonicBasis>, KeyHash> map_;
  std::size_t hits_ = 0;
  std::size_t misses_ = 0;
};

using BasisSet = std::vector<std::shared_ptr<const LocalHarmonicBasis>>;

inline BasisSet build_bases(const PolyMesh& mesh, int depth = 3, BasisCache* cache = nullptr) {
  BasisSet out(mesh.num_elements());
  parallel_for(mesh.num_elements(), [&](std::size_t k) {
    const MeshElement& el = mesh.element(k);
    out[k] = cache ? cache->get(el, depth)
                   : std::make_shared<const LocalHarmonicBasis>(build_basis(el, depth));
  });
  return out;
}

enum class Scheme { Pointwise, Clement, ScottZhang };

inline const char* to_string(Scheme s) {
  switch (s) {
    case Scheme::Pointwise: return "pointwise";
    case Scheme::Clement: return "clement";
    case Scheme::ScottZhang: return "scott_zhang";
  }
  return "unknown";
}

struct InterpolantCoefficients {
  Scheme scheme = Scheme::Pointwise;
  std::vector<double> values;
};

/// Edge used by the Scott-Zhang operator for node i: among the edges through
/// x_i (restricted to Dirichlet edges when x_i is a Dirichlet node) the
/// longest one, ties going to the lowest edge id.
inline int scott_zhang_edge(const PolyMesh& mesh, std::size_t i) {
  const bool dirichlet = mesh.node(i).tag == BoundaryTag::dirichlet;
  int best = -1;
  double best_len = -1.0;
  for (int e : mesh.node_edges(i)) {
    const MeshEdge& ed = mesh.edge(e);
    if (dirichlet && !(ed.on_boundary() && ed.tag == BoundaryTag::dirichlet)) continue;
    const double len = (mesh.node(ed.nodes[0]).coords - mesh.node(ed.nodes[1]).coords).norm();
    if (best < 0 || len > best_len * (1.0 + 1e-12)) {
      best = e;
      best_len = len;
    } else if (std::abs(len - best_len) <= 1e-12 * len && e < best) {
      best = e;
    }
  }
  if (best < 0) throw Error(ErrorKind::NoAdmissibleEdge, "no admissible edge for node " + std::to_string(i));
  return best;
}

/// Interpolation coefficients. CLEMENT uses patch means and leaves Dirichlet
/// nodes at zero when `dirichlet_zero` is set; SCOTT_ZHANG uses edge means.
inline InterpolantCoefficients coefficients(const PolyMesh& mesh, const ScalarField& v, Scheme scheme,
                                            const QuadratureOptions& opts = {}, bool dirichlet_zero = true) {
  InterpolantCoefficients c;
  c.scheme = scheme;
  const std::size_t n = mesh.num_nodes();
  c.values.assign(n, 0.0);
  switch (scheme) {
    case Scheme::Pointwise:
      for (std::size_t i = 0; i < n; ++i) c.values[i] = v.value(mesh.node(i).coords);
      break;
    case Scheme::Clement: {
      std::vector<double> integral(mesh.num_elements());
      parallel_for(mesh.num_elements(), [&](std::size_t k) {
        integral[k] = integrate_on_element(mesh.element(k), [&](const Vec2& x) { return v.value(x); }, opts);
      });
      for (std::size_t i = 0; i < n; ++i) {
        if (dirichlet_zero && mesh.node(i).tag == BoundaryTag::dirichlet) continue;
        double num = 0.0, den = 0.0;
        for (int k : mesh.node_patch(i)) {
          num += integral[k];
          den += mesh.element(k).area();
        }
        c.values[i] = num / den;
      }
      break;
    }
    case Scheme::ScottZhang:
      parallel_for(n, [&](std::size_t i) {
        const MeshEdge& ed = mesh.edge(scott_zhang_edge(mesh, i));
        const Vec2 a = mesh.node(ed.nodes[0]).coords;
        const Vec2 b = mesh.node(ed.nodes[1]).coords;
        const double len = (b - a).norm();
        const int pieces = std::max(1, static_cast<int>(std::ceil(opts.layer_scale * len)));
        c.values[i] = integrate_segment(a, b, [&](const Vec2& x) { return v.value(x); }, opts.order, pieces) / len;
      });
      break;
  }
  return c;
}

/// Interpolant nodal values on the sub-triangulation of element k.
inline Eigen::VectorXd local_values(const PolyMesh& mesh, std::size_t k, const LocalHarmonicBasis& b,
                                    const InterpolantCoefficients& c) {
  const auto& loop = mesh.element(k).loop;
  Eigen::VectorXd coef(static_cast<Eigen::Index>(loop.size()));
  for (std::size_t i = 0; i < loop.size(); ++i) coef(static_cast<Eigen::Index>(i)) = c.values[loop[i]];
  return b.values * coef;
}

inline double interpolant_value(const PolyMesh& mesh, const BasisSet& bases, const InterpolantCoefficients& c,
                                const Vec2& x) {
  for (std::size_t k = 0; k < mesh.num_elements(); ++k) {
    const MeshElement& el = mesh.element(k);
    const auto [lo, hi] = el.polygon.bounding_box();
    const double tol = 1e-12 * el.diameter();
    if ((x.array() < lo.array() - tol).any() || (x.array() > hi.array() + tol).any()) continue;
    if (!el.polygon.contains(x) && el.polygon.boundary_distance(x) > tol) continue;
    const LocalHarmonicBasis& b = *bases[k];
    const Eigen::VectorXd vals = local_values(mesh, k, b, c);
    double best = -std::numeric_limits<double>::infinity();
    double value = 0.0;
    for (const auto& t : b.sub.triangles) {
      const Vec2& p0 = b.sub.nodes[t[0]];
      const Vec2& p1 = b.sub.nodes[t[1]];
      const Vec2& p2 = b.sub.nodes[t[2]];
      const double det = cross(p1 - p0, p2 - p0);
      const double l1 = cross(x - p0, p2 - p0) / det;
      const double l2 = cross(p1 - p0, x - p0) / det;
      const double l0 = 1.0 - l1 - l2;
      const double worst = std::min({l0, l1, l2});
      if (worst > best) {
        best = worst;
        value = l0 * vals(t[0]) + l1 * vals(t[1]) + l2 * vals(t[2]);
      }
    }
    if (best >= -1e-9) return value;
  }
  throw Error(ErrorKind::PointOutsideMesh, "point is not inside any element");
}

/// (sum over K of the integral of (v - Iv)^2)^(1/2). The interpolant is linear on
/// each sub-triangle; sub-triangles are further subdivided so that the
/// quadrature resolves the field at the scale of QuadratureOptions.
inline double l2_error(const PolyMesh& mesh, const ScalarField& v, const InterpolantCoefficients& c,
                       const BasisSet& bases, const QuadratureOptions& opts = {}) {
  std::vector<double> local(mesh.num_elements(), 0.0);
  parallel_for(mesh.num_elements(), [&](std::size_t k) {
    const LocalHarmonicBasis& b = *bases[k];
    const Eigen::VectorXd vals = local_values(mesh, k, b, c);
    // Extra subdivision so that quadrature cells reach the layer scale.
    double h_sub = 0.0;
    for (const auto& t : b.sub.triangles) {
      for (int e = 0; e < 3; ++e) h_sub = std::max(h_sub, (b.sub.nodes[t[e]] - b.sub.nodes[t[(e + 1) % 3]]).norm());
    }
    const int sub_depth =
        std::clamp(static_cast<int>(std::ceil(std::log2(std::max(opts.layer_scale * h_sub, 1.0)))), 0, 3);
    const QuadratureRule& rule = composite_triangle_rule(opts.order, sub_depth);
    double sum = 0.0;
    for (const auto& t : b.sub.triangles) {
      const Vec2& p0 = b.sub.nodes[t[0]];
      const Vec2 e1 = b.sub.nodes[t[1]] - p0;
      const Vec2 e2 = b.sub.nodes[t[2]] - p0;
      const double jac = std::abs(cross(e1, e2));
      const double f0 = vals(t[0]), f1 = vals(t[1]), f2 = vals(t[2]);
      double part = 0.0;
      for (std::size_t q = 0; q < rule.points.size(); ++q) {
        const Vec2& xi = rule.points[q];
        const double iv = f0 + xi.x() * (f1 - f0) + xi.y() * (f2 - f0);
        const double d = v.value(p0 + xi.x() * e1 + xi.y() * e2) - iv;
        part += rule.weights[q] * d * d;
      }
      sum += part * jac;
    }
    local[k] = sum;
  });
  double total = 0.0;
  for (double e : local) total += e;
  return std::sqrt(total);
}

}  // namespace anisomesh
