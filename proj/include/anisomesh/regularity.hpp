#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <vector>

#include "anisomesh/geometry.hpp"
#include "anisomesh/kernel.hpp"
#include "anisomesh/mesh.hpp"
#include "anisomesh/parallel.hpp"

namespace anisomesh {

struct ElementRegularity {
  double rho = 0.0;
  Vec2 z = Vec2::Zero();
  double diameter = 0.0;
  /// h / rho; infinite for elements that are not star-shaped.
  double aspect = 0.0;
  /// max over loop edges of h / |e|.
  double min_edge_ratio = 0.0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double lambda_ratio = 1.0;
  double alpha = 0.0;
  std::size_t n_nodes = 0;
};

inline ElementRegularity audit_polygon(const Polygon& poly) {
  ElementRegularity r;
  const StarKernel k = star_kernel(poly);
  r.rho = k.rho;
  r.z = k.center;
  r.diameter = poly.diameter();
  r.aspect = k.rho > 0.0 ? r.diameter / k.rho : std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < poly.size(); ++i) {
    r.min_edge_ratio = std::max(r.min_edge_ratio, r.diameter / (poly.vertex(i + 1) - poly[i]).norm());
  }
  const Moments m = polygon_moments(poly);
  const CovarianceSpectrum s = spectrum_of(m.second_moment);
  r.lambda1 = s.lambda1;
  r.lambda2 = s.lambda2;
  r.lambda_ratio = s.anisotropy_ratio();
  r.alpha = reference_map(s, m.area).alpha;
  r.n_nodes = poly.size();
  return r;
}

/// Record of an element and of its reference configuration.
struct ElementAudit {
  ElementRegularity physical;
  ElementRegularity reference;
};

inline ElementAudit audit_element(const MeshElement& el) {
  return {audit_polygon(el.polygon), audit_polygon(map_polygon(el.polygon, el.map))};
}

struct NeighbourRegularity {
  int k1 = 0;
  int k2 = 0;
  /// lambda_{K2,j} / lambda_{K1,j} - 1 for j = 1, 2.
  std::array<double, 2> delta{0.0, 0.0};
  double delta_max = 0.0;
  /// Unscaled ||R - I||_2 with R = U_{K2} U_{K1}^T.
  double rotation_norm = 0.0;
  /// ||R - I||_2 * sqrt(lambda_{K1,1} / lambda_{K1,2}).
  double rotation_term = 0.0;
};

/// Relative rotation between the eigenframes of two spectra. Eigenvectors are
/// only defined up to sign, so U_{K2} is flipped (a rotation by pi) when its
/// first axis points away from that of K1; R stays a proper rotation.
inline Mat2 relative_rotation(const CovarianceSpectrum& s1, const CovarianceSpectrum& s2) {
  Mat2 U2 = s2.eigenvectors();
  if (s2.u1.dot(s1.u1) < 0.0) U2 = -U2;
  return U2 * s1.eigenvectors().transpose();
}

inline NeighbourRegularity audit_pair(const CovarianceSpectrum& s1, const CovarianceSpectrum& s2, int k1 = 0,
                                      int k2 = 1) {
  NeighbourRegularity r;
  r.k1 = k1;
  r.k2 = k2;
  r.delta = {s2.lambda1 / s1.lambda1 - 1.0, s2.lambda2 / s1.lambda2 - 1.0};
  r.delta_max = std::max(std::abs(r.delta[0]), std::abs(r.delta[1]));
  const Mat2 D = relative_rotation(s1, s2) - Mat2::Identity();
  r.rotation_norm = std::sqrt(std::max(0.0, symmetric_eigen(D.transpose() * D).lambda1));
  r.rotation_term = r.rotation_norm * std::sqrt(s1.lambda1 / s1.lambda2);
  return r;
}

/// Both orderings of every pair of elements whose closures share a node.
inline std::vector<NeighbourRegularity> audit_neighbours(const PolyMesh& mesh) {
  std::vector<NeighbourRegularity> out;
  for (const auto& [a, b] : mesh.neighbour_pairs()) {
    out.push_back(audit_pair(mesh.element(a).spectrum, mesh.element(b).spectrum, a, b));
    out.push_back(audit_pair(mesh.element(b).spectrum, mesh.element(a).spectrum, b, a));
  }
  return out;
}

struct MappedPatchAudit {
  int element = 0;
  std::vector<int> patch;
  /// Audits of F_K(K') for every K' in the patch, in patch order.
  std::vector<ElementRegularity> mapped;
  /// |K'| / |K| in patch order.
  std::vector<double> area_ratio;
  /// Diameter of the mapped patch.
  double h_patch = 0.0;
  double max_aspect = 0.0;
};

inline MappedPatchAudit audit_mapped_patch(const PolyMesh& mesh, std::size_t k) {
  MappedPatchAudit out;
  out.element = static_cast<int>(k);
  out.patch = mesh.element_patch(k);
  const Mat2& A = mesh.element(k).map.matrix;
  std::vector<Vec2> pts;
  for (int j : out.patch) {
    const Polygon mapped = map_polygon(mesh.element(j).polygon, A);
    out.mapped.push_back(audit_polygon(mapped));
    out.area_ratio.push_back(mesh.element(j).area() / mesh.element(k).area());
    out.max_aspect = std::max(out.max_aspect, out.mapped.back().aspect);
    pts.insert(pts.end(), mapped.vertices().begin(), mapped.vertices().end());
  }
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) out.h_patch = std::max(out.h_patch, (pts[i] - pts[j]).norm());
  return out;
}

struct Histogram {
  std::vector<double> edges;  // bins + 1 entries
  std::vector<std::size_t> counts;
};

inline Histogram make_histogram(const std::vector<double>& values, double lo, double hi, std::size_t bins) {
  Histogram h;
  if (bins == 0) return h;
  if (!(hi > lo)) hi = lo + 1.0;
  for (std::size_t b = 0; b <= bins; ++b) h.edges.push_back(lo + (hi - lo) * static_cast<double>(b) / bins);
  h.counts.assign(bins, 0);
  for (double v : values) {
    const double t = (v - lo) / (hi - lo);
    const auto b = static_cast<std::ptrdiff_t>(std::floor(t * bins));
    h.counts[static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(b, 0, static_cast<std::ptrdiff_t>(bins) - 1))]++;
  }
  return h;
}

struct RegularityAudit {
  std::vector<ElementAudit> elements;
  std::vector<NeighbourRegularity> pairs;
  double sigma = 0.0;            // max h/rho over the elements
  double sigma_reference = 0.0;  // max h/rho over the reference configurations
  double c_edge = 0.0;           // max h/|e|
  double c_delta = 0.0;
  double c_rotation = 0.0;
  double max_lambda_ratio = 1.0;
  double alpha_min = 0.0;
  double alpha_max = 0.0;
  std::size_t max_valence = 0;
  Histogram lambda_ratio_log10;
  Histogram alpha;
};

inline RegularityAudit audit_mesh(const PolyMesh& mesh, std::size_t bins = 10) {
  RegularityAudit a;
  a.elements.resize(mesh.num_elements());
  parallel_for(mesh.num_elements(), [&](std::size_t k) { a.elements[k] = audit_element(mesh.element(k)); });
  a.pairs = audit_neighbours(mesh);
  a.alpha_min = std::numeric_limits<double>::infinity();
  a.alpha_max = 0.0;
  std::vector<double> log_ratio, alpha;
  for (const auto& e : a.elements) {
    a.sigma = std::max(a.sigma, e.physical.aspect);
    a.sigma_reference = std::max(a.sigma_reference, e.reference.aspect);
    a.c_edge = std::max(a.c_edge, e.physical.min_edge_ratio);
    a.max_lambda_ratio = std::max(a.max_lambda_ratio, e.physical.lambda_ratio);
    a.alpha_min = std::min(a.alpha_min, e.physical.alpha);
    a.alpha_max = std::max(a.alpha_max, e.physical.alpha);
    log_ratio.push_back(std::log10(e.physical.lambda_ratio));
    alpha.push_back(e.physical.alpha);
  }
  for (const auto& p : a.pairs) {
    a.c_delta = std::max(a.c_delta, p.delta_max);
    a.c_rotation = std::max(a.c_rotation, p.rotation_term);
  }
  a.max_valence = mesh.max_node_valence();
  const double top = std::max(1.0, std::ceil(std::log10(a.max_lambda_ratio)));
  a.lambda_ratio_log10 = make_histogram(log_ratio, 0.0, top, bins);
  a.alpha = make_histogram(alpha, a.alpha_min, a.alpha_max, bins);
  return a;
}

/// Aspect bound for mapped patches, sqrt((1+c_delta)/(1-c_delta)) (1+c_R)^2 sigma;
/// undefined when c_delta >= 1.
inline std::optional<double> perturbed_aspect_bound(double sigma, double c_delta, double c_rotation) {
  if (!(c_delta < 1.0)) return std::nullopt;
  return std::sqrt((1.0 + c_delta) / (1.0 - c_delta)) * (1.0 + c_rotation) * (1.0 + c_rotation) * sigma;
}

inline void write_element_audit_csv(const RegularityAudit& a, std::ostream& out) {
  out << "element_id,lambda1,lambda2,ratio,alpha,rho,aspect,min_edge_ratio,n_nodes\n";
  out.precision(10);
  for (std::size_t k = 0; k < a.elements.size(); ++k) {
    const auto& r = a.elements[k].physical;
    out << k << ',' << r.lambda1 << ',' << r.lambda2 << ',' << r.lambda_ratio << ',' << r.alpha << ',' << r.rho << ','
        << r.aspect << ',' << r.min_edge_ratio << ',' << r.n_nodes << '\n';
  }
}

inline void write_pair_audit_csv(const RegularityAudit& a, std::ostream& out) {
  out << "pair,k1,k2,delta_max,rotation_term\n";
  out.precision(10);
  for (std::size_t p = 0; p < a.pairs.size(); ++p) {
    const auto& r = a.pairs[p];
    out << p << ',' << r.k1 << ',' << r.k2 << ',' << r.delta_max << ',' << r.rotation_term << '\n';
  }
}

}  // namespace anisomesh
