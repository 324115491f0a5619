#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <type_traits>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "anisomesh/geometry.hpp"

namespace anisomesh {

struct GaussRule1D {
  std::vector<double> points;   // on [0, 1]
  std::vector<double> weights;  // sum to the weight integral on [0, 1]
};

/// Gauss-Jacobi rule for the weight (1-x)^a (1+x)^b on [-1,1] (Golub-Welsch),
/// returned on [-1, 1].
inline std::pair<std::vector<double>, std::vector<double>> gauss_jacobi(int n, double a, double b) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    const double s = 2.0 * k + a + b;
    J(k, k) = (k == 0) ? (b - a) / (a + b + 2.0) : (b * b - a * a) / (s * (s + 2.0));
    if (k + 1 < n) {
      const double m = k + 1.0;
      const double t = 2.0 * m + a + b;
      const double off = std::sqrt(4.0 * m * (m + a) * (m + b) * (m + a + b) / (t * t * (t + 1.0) * (t - 1.0)));
      J(k, k + 1) = J(k + 1, k) = off;
    }
  }
  const double mu0 = std::pow(2.0, a + b + 1.0) * std::tgamma(a + 1.0) * std::tgamma(b + 1.0) /
                     std::tgamma(a + b + 2.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  std::vector<double> x(n), w(n);
  for (int k = 0; k < n; ++k) {
    x[k] = es.eigenvalues()(k);
    const double v0 = es.eigenvectors()(0, k);
    w[k] = mu0 * v0 * v0;
  }
  return {x, w};
}

/// n-point Gauss-Legendre on [0, 1].
inline GaussRule1D gauss_legendre(int n) {
  auto [x, w] = gauss_jacobi(n, 0.0, 0.0);
  GaussRule1D r;
  for (int k = 0; k < n; ++k) {
    r.points.push_back(0.5 * (x[k] + 1.0));
    r.weights.push_back(0.5 * w[k]);
  }
  return r;
}

/// Gauss-Legendre rule exact for polynomials up to `order` on [0, 1].
inline const GaussRule1D& line_rule(int order) {
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<GaussRule1D>> cache;
  const int n = std::max(1, (order + 2) / 2);
  std::lock_guard lock(mutex);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<GaussRule1D>(gauss_legendre(n));
  return *slot;
}

/// Rule on the reference triangle {x, y >= 0, x + y <= 1}; weights sum to 1/2.
struct QuadratureRule {
  int order = 0;
  std::vector<Vec2> points;
  std::vector<double> weights;
};

/// Collapsed (Duffy) product rule: Gauss-Jacobi(1,0) in the collapsed
/// direction times Gauss-Legendre. All weights are positive.
inline QuadratureRule make_triangle_rule(int order) {
  const int n = std::max(1, (order + 2) / 2);
  auto [xu, wu] = gauss_jacobi(n, 1.0, 0.0);
  const GaussRule1D gl = gauss_legendre(n);
  QuadratureRule r;
  r.order = order;
  for (int i = 0; i < n; ++i) {
    const double u = 0.5 * (xu[i] + 1.0);
    const double wui = 0.25 * wu[i];  // integral of g(u)(1-u) over [0,1]
    for (int j = 0; j < n; ++j) {
      r.points.emplace_back(u, (1.0 - u) * gl.points[j]);
      r.weights.push_back(wui * gl.weights[j]);
    }
  }
  return r;
}

/// Rule of the requested order composed over the 4^depth congruent
/// sub-triangles of a uniform refinement of the reference triangle.
inline const QuadratureRule& composite_triangle_rule(int order, int depth) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::unique_ptr<QuadratureRule>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[{order, depth}];
  if (slot) return *slot;
  const QuadratureRule base = make_triangle_rule(order);
  auto out = std::make_unique<QuadratureRule>();
  out->order = order;
  const int m = 1 << depth;
  const double hs = 1.0 / m;
  const double wscale = hs * hs;
  auto emit = [&](const Vec2& p0, const Vec2& p1, const Vec2& p2) {
    for (std::size_t q = 0; q < base.points.size(); ++q) {
      const Vec2& xi = base.points[q];
      out->points.push_back(p0 + xi.x() * (p1 - p0) + xi.y() * (p2 - p0));
      out->weights.push_back(base.weights[q] * wscale);
    }
  };
  for (int i = 0; i < m; ++i) {
    for (int j = 0; i + j < m; ++j) {
      const Vec2 a(i * hs, j * hs);
      emit(a, a + Vec2(hs, 0.0), a + Vec2(0.0, hs));
      if (i + j + 2 <= m) emit(a + Vec2(hs, 0.0), a + Vec2(hs, hs), a + Vec2(0.0, hs));
    }
  }
  slot = std::move(out);
  return *slot;
}

namespace detail {

template <class R>
R zero_of() {
  if constexpr (std::is_arithmetic_v<R>) {
    return R(0);
  } else {
    return R::Zero();
  }
}

}  // namespace detail

/// Integral of f over the triangle (p0, p1, p2) with a reference-triangle rule.
/// f may return a scalar or a fixed-size Eigen object.
template <class F>
auto integrate_triangle(const Vec2& p0, const Vec2& p1, const Vec2& p2, F&& f, const QuadratureRule& rule) {
  using R = std::decay_t<decltype(f(std::declval<Vec2>()))>;
  const Vec2 e1 = p1 - p0;
  const Vec2 e2 = p2 - p0;
  const double jac = std::abs(cross(e1, e2));
  R sum = detail::zero_of<R>();
  for (std::size_t q = 0; q < rule.points.size(); ++q) {
    const Vec2& xi = rule.points[q];
    sum += rule.weights[q] * f(Vec2(p0 + xi.x() * e1 + xi.y() * e2));
  }
  return R(sum * jac);
}

/// Integral of f along the segment [a, b] with `pieces` equal sub-segments.
template <class F>
double integrate_segment(const Vec2& a, const Vec2& b, F&& f, int order = 7, int pieces = 1) {
  const GaussRule1D& rule = line_rule(order);
  const double len = (b - a).norm();
  double sum = 0.0;
  for (int p = 0; p < pieces; ++p) {
    const double t0 = static_cast<double>(p) / pieces;
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const double t = t0 + rule.points[q] / pieces;
      sum += rule.weights[q] * f(Vec2(a + t * (b - a)));
    }
  }
  return sum * len / pieces;
}

}  // namespace anisomesh
