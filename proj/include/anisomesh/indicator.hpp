#pragma once

#include <cmath>
#include <ostream>
#include <vector>

#include "anisomesh/fields.hpp"
#include "anisomesh/mesh.hpp"
#include "anisomesh/parallel.hpp"

namespace anisomesh {

/// Integral over a mesh element using its cached triangulation.
template <class F>
auto integrate_on_element(const MeshElement& el, F&& f, const QuadratureOptions& opts = {}) {
  return integrate_triangulation(el.triangulation, std::forward<F>(f), opts.order, opts.depth_for(el.diameter()));
}

/// G*(v) over one element: entries are integrals of d_i v * d_j v.
inline Mat2 gram_element(const MeshElement& el, const ScalarField& v, const QuadratureOptions& opts = {}) {
  Mat2 G = integrate_on_element(
      el,
      [&](const Vec2& x) -> Mat2 {
        const Vec2 g = v.gradient(x);
        return g * g.transpose();
      },
      opts);
  G(0, 1) = G(1, 0) = 0.5 * (G(0, 1) + G(1, 0));
  return G;
}

/// Gram matrix summed over the element patch of K.
inline Mat2 gram_patch(const PolyMesh& mesh, std::size_t k, const ScalarField& v, const QuadratureOptions& opts = {}) {
  Mat2 G = Mat2::Zero();
  for (int j : mesh.element_patch(k)) G += gram_element(mesh.element(j), v, opts);
  return G;
}

/// eta_K = alpha^-2 (lambda_1 u1^T G u1 + lambda_2 u2^T G u2), i.e. the squared
/// L2 norm of A^{-T} grad v over K.
inline double eta_from_gram(const CovarianceSpectrum& s, double alpha, const Mat2& G) {
  const double v = (s.lambda1 * s.u1.dot(G * s.u1) + s.lambda2 * s.u2.dot(G * s.u2)) / (alpha * alpha);
  return std::max(0.0, v);
}

inline double eta_local(const MeshElement& el, const ScalarField& v, const QuadratureOptions& opts = {}) {
  return eta_from_gram(el.spectrum, el.map.alpha, gram_element(el, v, opts));
}

struct IndicatorReport {
  std::vector<double> eta_local;
  double eta_global = 0.0;
  std::vector<int> marked;
  std::vector<Mat2> gram;
};

inline IndicatorReport eta_global(const PolyMesh& mesh, const ScalarField& v, const QuadratureOptions& opts = {}) {
  IndicatorReport r;
  const std::size_t n = mesh.num_elements();
  r.gram.assign(n, Mat2::Zero());
  r.eta_local.assign(n, 0.0);
  parallel_for(n, [&](std::size_t k) {
    const MeshElement& el = mesh.element(k);
    r.gram[k] = gram_element(el, v, opts);
    r.eta_local[k] = eta_from_gram(el.spectrum, el.map.alpha, r.gram[k]);
  });
  double sum = 0.0;
  for (double e : r.eta_local) sum += e;
  r.eta_global = std::sqrt(sum);
  return r;
}

struct HessianTerms {
  /// L(i, j) = integral of (u_i^T H u_j)^2.
  Mat2 L = Mat2::Zero();
  double s0 = 1.0;
  /// sqrt(lambda_1 / lambda_2) / |K|.
  double s1 = 0.0;
  /// alpha^-4 S_l sum_ij lambda_i lambda_j L_ij for l = 0, 1.
  double rhs0 = 0.0;
  double rhs1 = 0.0;
};

inline HessianTerms hessian_terms(const MeshElement& el, const ScalarField& v, const QuadratureOptions& opts = {}) {
  const CovarianceSpectrum& s = el.spectrum;
  const Mat2 U = s.eigenvectors();
  HessianTerms t;
  t.L = integrate_on_element(
      el,
      [&](const Vec2& x) -> Mat2 {
        const Mat2 M = U.transpose() * v.hessian(x) * U;
        return M.cwiseProduct(M);
      },
      opts);
  t.s1 = std::sqrt(s.lambda1 / s.lambda2) / el.area();
  const Eigen::Vector2d lam(s.lambda1, s.lambda2);
  const double weighted = lam.dot(t.L * lam);
  const double a4 = std::pow(el.map.alpha, 4);
  t.rhs0 = t.s0 * weighted / a4;
  t.rhs1 = t.s1 * weighted / a4;
  return t;
}

inline void write_indicator_csv(const PolyMesh& mesh, const IndicatorReport& r, std::ostream& out) {
  out << "element_id,eta,g11,g12,g22,lambda1,lambda2,alpha\n";
  out.precision(10);
  for (std::size_t k = 0; k < mesh.num_elements(); ++k) {
    const auto& el = mesh.element(k);
    const Mat2& G = r.gram[k];
    out << k << ',' << r.eta_local[k] << ',' << G(0, 0) << ',' << G(0, 1) << ',' << G(1, 1) << ','
        << el.spectrum.lambda1 << ',' << el.spectrum.lambda2 << ',' << el.map.alpha << '\n';
  }
}

}  // namespace anisomesh
