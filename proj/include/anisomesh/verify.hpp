#pragma once

// Numerical checks of the anisotropic inequalities. Constants are never
// known, so each check reports lhs / rhs without the constant; the sweeps test
// that these ratios do not drift with the element anisotropy.

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "anisomesh/error.hpp"
#include "anisomesh/expression.hpp"
#include "anisomesh/fields.hpp"
#include "anisomesh/geometry.hpp"
#include "anisomesh/indicator.hpp"
#include "anisomesh/mesh.hpp"
#include "anisomesh/regularity.hpp"

namespace anisomesh {

struct InequalityRecord {
  std::string name;
  std::string context;
  double lhs = 0.0;
  double rhs = 0.0;  // right-hand side without the constant
  double ratio = 0.0;
  /// Explicit upper bound for the ratio when one is known, else infinity.
  double bound = std::numeric_limits<double>::infinity();
};

inline double safe_ratio(double lhs, double rhs) {
  if (lhs == 0.0) return 0.0;
  return lhs / rhs;
}

namespace detail {

inline double mapped_gradient_sq(const ReferenceMap& map, const ScalarField& v, const Vec2& x) {
  return (map.inverse_transpose() * v.gradient(x)).squaredNorm();
}

}  // namespace detail

/// ||v||^2_E against (|E|/|K|)(||v||^2_K + ||A^{-T} grad v||^2_K) for edge e of K.
inline InequalityRecord check_trace(const Polygon& K, std::size_t e, const ScalarField& v,
                                    const QuadratureOptions& opts = {}, int edge_pieces = 16) {
  const ReferenceMap map = reference_map(K);
  const Vec2 a = K[e % K.size()];
  const Vec2 b = K.vertex(e + 1);
  const double len = (b - a).norm();
  InequalityRecord r;
  r.name = "trace";
  r.context = "edge " + std::to_string(e);
  r.lhs = integrate_segment(a, b, [&](const Vec2& x) { const double f = v.value(x); return f * f; }, opts.order,
                            edge_pieces);
  const double l2 = integrate_on_polygon(K, [&](const Vec2& x) { const double f = v.value(x); return f * f; }, opts);
  const double grad = integrate_on_polygon(K, [&](const Vec2& x) { return detail::mapped_gradient_sq(map, v, x); },
                                           opts);
  r.rhs = len / K.area() * (l2 + grad);
  r.ratio = safe_ratio(r.lhs, r.rhs);
  return r;
}

/// ||v - mean_omega v||_omega against ||A_K^{-T} grad v||_omega, with the map of K.
inline InequalityRecord check_poincare(const std::vector<Polygon>& omega, const ReferenceMap& map_K,
                                       const ScalarField& v, const QuadratureOptions& opts = {}) {
  double area = 0.0, integral = 0.0;
  for (const auto& P : omega) {
    area += P.area();
    integral += integrate_on_polygon(P, [&](const Vec2& x) { return v.value(x); }, opts);
  }
  const double mean = integral / area;
  double dev = 0.0, grad = 0.0;
  for (const auto& P : omega) {
    dev += integrate_on_polygon(P, [&](const Vec2& x) { const double d = v.value(x) - mean; return d * d; }, opts);
    grad += integrate_on_polygon(P, [&](const Vec2& x) { return detail::mapped_gradient_sq(map_K, v, x); }, opts);
  }
  // Roundoff in the mean would otherwise make constants look like 0/0 = inf.
  if (dev <= 1e-20 * mean * mean * area) dev = 0.0;
  InequalityRecord r;
  r.name = "poincare";
  r.lhs = std::sqrt(std::max(0.0, dev));
  r.rhs = std::sqrt(grad);
  r.ratio = safe_ratio(r.lhs, r.rhs);
  return r;
}

inline InequalityRecord check_poincare(const Polygon& K, const ScalarField& v, const QuadratureOptions& opts = {}) {
  return check_poincare(std::vector<Polygon>{K}, reference_map(K), v, opts);
}

/// Patch omega_K of element k of a mesh.
inline InequalityRecord check_poincare(const PolyMesh& mesh, std::size_t k, const ScalarField& v,
                                       const QuadratureOptions& opts = {}) {
  std::vector<Polygon> omega;
  for (int j : mesh.element_patch(k)) omega.push_back(mesh.element(j).polygon);
  InequalityRecord r = check_poincare(omega, mesh.element(k).map, v, opts);
  r.context = "element " + std::to_string(k);
  return r;
}

/// |v|^2_{H1(K)} against the seminorm of the pulled-back function on the
/// reference configuration. Throws SandwichViolated when
/// sqrt(l2/l1) |v^|^2 <= |v|^2 <= sqrt(l1/l2) |v^|^2 fails by more than `slack`.
inline InequalityRecord check_h1_mapping(const Polygon& K, const ScalarField& v, const QuadratureOptions& opts = {},
                                         double slack = 1e-8) {
  const Moments m = polygon_moments(K);
  const CovarianceSpectrum s = spectrum_of(m.second_moment);
  const ReferenceMap map = reference_map(s, m.area);
  const Polygon Khat = map_polygon(K, map);
  const double phys = integrate_on_polygon(K, [&](const Vec2& x) { return v.gradient(x).squaredNorm(); }, opts);
  // Integrate on the mapped polygon itself: grad^ v^(x^) = A^{-T} grad v(A^{-1} x^).
  const Mat2 AinvT = map.inverse_transpose();
  const double ref = integrate_on_polygon(
      Khat, [&](const Vec2& xh) { return (AinvT * v.gradient(map.inverse * xh)).squaredNorm(); }, opts.order,
      opts.depth_for(K.diameter()));
  InequalityRecord r;
  r.name = "h1_mapping";
  r.lhs = phys;
  r.rhs = ref;
  r.ratio = safe_ratio(phys, ref);
  const double q = std::sqrt(s.lambda1 / s.lambda2);
  r.bound = q;
  const double tol = slack * std::max(phys, ref);
  if (phys < ref / q - tol || phys > ref * q + tol) {
    throw Error(ErrorKind::SandwichViolated, "H1 seminorm outside the mapped sandwich: |v|^2 = " +
                                                 std::to_string(phys) + ", |v^|^2 = " + std::to_string(ref));
  }
  return r;
}

/// ||A_K^{-T} grad v||_{K'} against ||A_{K'}^{-T} grad v||_{K'}. The bound
/// (alpha_{K'}/alpha_K) sqrt(1 + delta) (1 + rotation term) uses the pair audit
/// from K' to K.
inline InequalityRecord check_neighbour_gradient(const MeshElement& K, const MeshElement& Kp, const ScalarField& v,
                                                 const QuadratureOptions& opts = {}) {
  const double lhs = integrate_on_element(Kp, [&](const Vec2& x) { return detail::mapped_gradient_sq(K.map, v, x); },
                                          opts);
  const double rhs = integrate_on_element(Kp, [&](const Vec2& x) { return detail::mapped_gradient_sq(Kp.map, v, x); },
                                          opts);
  InequalityRecord r;
  r.name = "neighbour";
  r.lhs = std::sqrt(lhs);
  r.rhs = std::sqrt(rhs);
  r.ratio = safe_ratio(r.lhs, r.rhs);
  const NeighbourRegularity pair = audit_pair(Kp.spectrum, K.spectrum);
  r.bound = Kp.map.alpha / K.map.alpha * std::sqrt(1.0 + pair.delta_max) * (1.0 + pair.rotation_term);
  return r;
}

/// f(x1 / s, x2): the field seen through a stretch by s along x1.
inline ScalarField stretched(const ScalarField& f, double s) {
  ScalarField g;
  g.label = f.label + "@s=" + std::to_string(s);
  g.value = [f, s](const Vec2& x) { return f.value(Vec2(x.x() / s, x.y())); };
  g.gradient = [f, s](const Vec2& x) {
    const Vec2 d = f.gradient(Vec2(x.x() / s, x.y()));
    return Vec2(d.x() / s, d.y());
  };
  g.hessian = [f, s](const Vec2& x) {
    Mat2 H = f.hessian(Vec2(x.x() / s, x.y()));
    H(0, 0) /= s * s;
    H(0, 1) /= s;
    H(1, 0) /= s;
    return H;
  };
  return g;
}

inline Polygon rectangle(double a, double b) {
  return Polygon({Vec2(0.0, 0.0), Vec2(a, 0.0), Vec2(a, b), Vec2(0.0, b)});
}

/// Monomials up to total degree 3, the sweep field set.
inline std::vector<ScalarField> polynomial_fields(bool with_constant = true) {
  std::vector<std::string> exprs = {"x1", "x2", "x1^2", "x1*x2", "x2^2", "x1^3", "x1^2*x2", "x1*x2^2", "x2^3",
                                    "1 + x1 - 2*x2 + x1*x2^2"};
  if (with_constant) exprs.insert(exprs.begin(), "1");
  std::vector<ScalarField> out;
  for (const auto& e : exprs) out.push_back(expression_field(e));
  return out;
}

inline const std::vector<double>& sweep_scales() {
  static const std::vector<double> s = {1.0, 1e1, 1e2, 1e3, 1e4};
  return s;
}

struct SweepResult {
  std::string name;
  std::vector<InequalityRecord> records;
  /// Worst max/min spread of a ratio over the scale family (trace, poincare).
  double worst_spread = 1.0;
  bool passed = true;
  std::string summary;
};

namespace detail {

inline void spread_check(SweepResult& out, const std::vector<double>& ratios, double limit) {
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (double r : ratios) {
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  if (hi == 0.0) return;
  const double spread = hi / lo;
  out.worst_spread = std::max(out.worst_spread, spread);
  if (!(spread <= limit)) out.passed = false;
}

}  // namespace detail

/// Trace ratios on [0,s]x[0,1] for every edge and polynomial field.
inline SweepResult sweep_trace(double limit = 2.0, bool include_tanh = false) {
  SweepResult out;
  out.name = "trace";
  auto fields = polynomial_fields(true);
  if (include_tanh) fields.push_back(tanh_layer());
  for (std::size_t f = 0; f < fields.size(); ++f) {
    QuadratureOptions opts;
    opts.depth = f + 1 == fields.size() && include_tanh ? 5 : 0;
    const int pieces = opts.depth > 0 ? 64 : 1;
    for (std::size_t e = 0; e < 4; ++e) {
      std::vector<double> ratios;
      for (double s : sweep_scales()) {
        InequalityRecord r = check_trace(rectangle(s, 1.0), e, stretched(fields[f], s), opts, pieces);
        r.context = fields[f].label + ";s=" + std::to_string(s) + ";edge=" + std::to_string(e);
        ratios.push_back(r.ratio);
        out.records.push_back(std::move(r));
      }
      detail::spread_check(out, ratios, limit);
    }
  }
  out.summary = "trace: worst max/min ratio over s = " + std::to_string(out.worst_spread);
  return out;
}

inline SweepResult sweep_poincare(double limit = 2.0, bool include_tanh = false) {
  SweepResult out;
  out.name = "poincare";
  auto fields = polynomial_fields(false);
  if (include_tanh) fields.push_back(tanh_layer());
  for (std::size_t f = 0; f < fields.size(); ++f) {
    QuadratureOptions opts;
    opts.depth = f + 1 == fields.size() && include_tanh ? 5 : 0;
    std::vector<double> ratios;
    for (double s : sweep_scales()) {
      InequalityRecord r = check_poincare(rectangle(s, 1.0), stretched(fields[f], s), opts);
      r.context = fields[f].label + ";s=" + std::to_string(s);
      ratios.push_back(r.ratio);
      out.records.push_back(std::move(r));
    }
    detail::spread_check(out, ratios, limit);
  }
  out.summary = "poincare: worst max/min ratio over s = " + std::to_string(out.worst_spread);
  return out;
}

/// Random simple polygon: sorted random angles with random radii, then an
/// anisotropic stretch and a rotation.
inline Polygon random_polygon(std::mt19937_64& rng, int n, double stretch) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> angles(static_cast<std::size_t>(n));
  for (double& a : angles) a = 2.0 * std::acos(-1.0) * unit(rng);
  std::sort(angles.begin(), angles.end());
  const double theta = 2.0 * std::acos(-1.0) * unit(rng);
  const Vec2 shift(4.0 * unit(rng) - 2.0, 4.0 * unit(rng) - 2.0);
  const Mat2 R = Eigen::Rotation2Dd(theta).toRotationMatrix();
  for (;;) {
    std::vector<Vec2> pts;
    for (double a : angles) {
      const double r = 0.4 + 0.6 * unit(rng);
      pts.push_back(R * Vec2(stretch * r * std::cos(a), r * std::sin(a)) + shift);
    }
    try {
      return Polygon(std::move(pts));
    } catch (const Error&) {
      for (double& a : angles) a = 2.0 * std::acos(-1.0) * unit(rng);
      std::sort(angles.begin(), angles.end());
    }
  }
}

/// Random cubic polynomial in local coordinates scaled to the box [lo, hi].
inline ScalarField random_cubic(std::mt19937_64& rng, const Vec2& lo, const Vec2& hi) {
  std::uniform_real_distribution<double> c(-1.0, 1.0);
  std::string e;
  const char* monomials[] = {"1", "X", "Y", "X^2", "X*Y", "Y^2", "X^3", "X^2*Y", "X*Y^2", "Y^3"};
  const std::string X = "((x1 - (" + std::to_string(lo.x()) + ")) / " + std::to_string(hi.x() - lo.x()) + ")";
  const std::string Y = "((x2 - (" + std::to_string(lo.y()) + ")) / " + std::to_string(hi.y() - lo.y()) + ")";
  for (const char* m : monomials) {
    std::string term = m;
    std::string expanded;
    for (char ch : term) {
      if (ch == 'X') expanded += X;
      else if (ch == 'Y') expanded += Y;
      else expanded += ch;
    }
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6f", c(rng));
    e += (e.empty() ? "" : " + ") + std::string("(") + buf + ")*" + expanded;
  }
  return expression_field(e);
}

/// H1 sandwich on the rectangle family and on random polygons with cubic fields.
inline SweepResult sweep_h1(std::uint64_t seed = 7, int random_cases = 40) {
  SweepResult out;
  out.name = "h1";
  QuadratureOptions opts;
  opts.depth = 0;
  auto record = [&](const Polygon& K, const ScalarField& f, const std::string& ctx) {
    try {
      InequalityRecord r = check_h1_mapping(K, f, opts);
      r.context = ctx;
      out.records.push_back(std::move(r));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::SandwichViolated) throw;
      out.passed = false;
      InequalityRecord r;
      r.name = "h1_mapping";
      r.context = ctx + ";VIOLATED";
      r.ratio = std::numeric_limits<double>::quiet_NaN();
      out.records.push_back(std::move(r));
    }
  };
  for (const auto& f : polynomial_fields(false)) {
    for (double s : sweep_scales()) record(rectangle(s, 1.0), stretched(f, s), f.label + ";s=" + std::to_string(s));
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> nv(3, 12);
  std::uniform_real_distribution<double> logr(0.0, 2.0);
  for (int c = 0; c < random_cases; ++c) {
    const Polygon K = random_polygon(rng, nv(rng), std::pow(10.0, logr(rng)));
    const auto [lo, hi] = K.bounding_box();
    record(K, random_cubic(rng, lo, hi), "random " + std::to_string(c));
  }
  out.summary = "h1: " + std::to_string(out.records.size()) + " cases, " + (out.passed ? "sandwich holds" : "VIOLATED");
  return out;
}

/// Neighbour-gradient ratios over every ordered neighbour pair of a mesh,
/// checked against the audited pairwise bound.
inline SweepResult sweep_neighbour(const PolyMesh& mesh, const std::vector<ScalarField>& fields,
                                   const QuadratureOptions& opts = {}) {
  SweepResult out;
  out.name = "neighbour";
  for (const auto& f : fields) {
    for (const auto& [a, b] : mesh.neighbour_pairs()) {
      for (const auto& [k, kp] : {std::pair{a, b}, std::pair{b, a}}) {
        InequalityRecord r = check_neighbour_gradient(mesh.element(k), mesh.element(kp), f, opts);
        r.context = f.label + ";K=" + std::to_string(k) + ";K'=" + std::to_string(kp);
        if (r.ratio > r.bound * (1.0 + 1e-8)) out.passed = false;
        out.records.push_back(std::move(r));
      }
    }
  }
  out.summary = "neighbour: " + std::to_string(out.records.size()) + " pairs, " +
                (out.passed ? "all within the audited bound" : "BOUND EXCEEDED");
  return out;
}

inline void write_sweep_csv(const SweepResult& s, std::ostream& out) {
  out << "name,context,ratio\n";
  out.precision(12);
  for (const auto& r : s.records) out << r.name << ',' << r.context << ',' << r.ratio << '\n';
}

}  // namespace anisomesh
