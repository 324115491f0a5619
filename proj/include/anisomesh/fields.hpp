#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <type_traits>
#include <utility>

#include "anisomesh/geometry.hpp"
#include "anisomesh/quadrature.hpp"
#include "anisomesh/triangulation.hpp"

namespace anisomesh {

/// Analytic scalar field with closed-form derivatives.
struct ScalarField {
  std::function<double(const Vec2&)> value;
  std::function<Vec2(const Vec2&)> gradient;
  std::function<Mat2(const Vec2&)> hessian;
  std::string label;
};

/// v(x1, x2) = tanh(60 x2) - tanh(60 (x1 - x2) - 30): two sharp layers, along
/// the x1-axis and along x2 = x1 - 0.5.
inline ScalarField tanh_layer() {
  constexpr double k = 60.0;
  ScalarField f;
  f.label = "tanh_layer";
  f.value = [](const Vec2& x) { return std::tanh(k * x.y()) - std::tanh(k * (x.x() - x.y()) - 30.0); };
  f.gradient = [](const Vec2& x) {
    const double t1 = std::tanh(k * x.y());
    const double t2 = std::tanh(k * (x.x() - x.y()) - 30.0);
    const double s1 = 1.0 - t1 * t1;  // sech^2
    const double s2 = 1.0 - t2 * t2;
    return Vec2(-k * s2, k * s1 + k * s2);
  };
  f.hessian = [](const Vec2& x) {
    const double t1 = std::tanh(k * x.y());
    const double t2 = std::tanh(k * (x.x() - x.y()) - 30.0);
    // d/dz sech^2(z) = -2 sech^2(z) tanh(z)
    const double d1 = -2.0 * (1.0 - t1 * t1) * t1 * k * k;
    const double d2 = -2.0 * (1.0 - t2 * t2) * t2 * k * k;
    Mat2 H;
    H(0, 0) = -d2;
    H(0, 1) = H(1, 0) = d2;
    H(1, 1) = d1 - d2;
    return H;
  };
  return f;
}

struct QuadratureOptions {
  int order = 7;
  /// Fixed subdivision depth; negative selects max(min_depth, ceil(log2(layer_scale * h_K))).
  int depth = -1;
  double layer_scale = 60.0;
  int min_depth = 2;
  int max_depth = 7;

  int depth_for(double h) const {
    if (depth >= 0) return depth;
    const double want = std::ceil(std::log2(std::max(layer_scale * h, 1.0)));
    return std::clamp(static_cast<int>(want), min_depth, std::max(min_depth, max_depth));
  }
};

/// Integral of f over a triangulated polygon; each triangle carries the
/// composite rule of the given order and depth.
template <class F>
auto integrate_triangulation(const Triangulation& tri, F&& f, int order, int depth) {
  using R = std::decay_t<decltype(f(std::declval<Vec2>()))>;
  const QuadratureRule& rule = composite_triangle_rule(order, depth);
  R sum = detail::zero_of<R>();
  for (const auto& t : tri.triangles) {
    sum += integrate_triangle(tri.points[t[0]], tri.points[t[1]], tri.points[t[2]], f, rule);
  }
  return sum;
}

/// Integral of f over `poly`: kernel fan (ear clipping if not star-shaped),
/// every triangle uniformly subdivided `depth` times.
template <class F>
auto integrate_on_polygon(const Polygon& poly, F&& f, int order, int depth) {
  return integrate_triangulation(triangulate(poly), std::forward<F>(f), order, depth);
}

template <class F>
auto integrate_on_polygon(const Polygon& poly, F&& f, const QuadratureOptions& opts = {}) {
  return integrate_on_polygon(poly, std::forward<F>(f), opts.order, opts.depth_for(poly.diameter()));
}

}  // namespace anisomesh
