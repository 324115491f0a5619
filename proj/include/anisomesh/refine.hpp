#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "anisomesh/error.hpp"
#include "anisomesh/geometry.hpp"
#include "anisomesh/indicator.hpp"
#include "anisomesh/mesh.hpp"

namespace anisomesh {

enum class Strategy { Uniform, Isotropic, Anisotropic };

inline const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::Uniform: return "uniform";
    case Strategy::Isotropic: return "isotropic";
    case Strategy::Anisotropic: return "anisotropic";
  }
  return "unknown";
}

inline Strategy parse_strategy(const std::string& s) {
  if (s == "uniform" || s == "UNIFORM") return Strategy::Uniform;
  if (s == "isotropic" || s == "ISOTROPIC") return Strategy::Isotropic;
  if (s == "anisotropic" || s == "ANISOTROPIC") return Strategy::Anisotropic;
  throw Error(ErrorKind::InvalidConfig, "unknown strategy '" + s + "'");
}

struct RefineConfig {
  Strategy strategy = Strategy::Anisotropic;
  double marking_factor = 0.9;
  int max_levels = 1;
  double snap_tol = 1e-9;
  QuadratureOptions quadrature;
};

/// Elements with eta_K > factor * (sum of eta_K) / n, ascending.
inline std::vector<int> mark(const std::vector<double>& eta_local, double factor = 0.9) {
  std::vector<int> out;
  if (eta_local.empty()) return out;
  double sum = 0.0;
  for (double e : eta_local) sum += e;
  const double threshold = factor * sum / static_cast<double>(eta_local.size());
  for (std::size_t k = 0; k < eta_local.size(); ++k) {
    if (eta_local[k] > threshold) out.push_back(static_cast<int>(k));
  }
  return out;
}

inline std::vector<int> mark(const IndicatorReport& r, double factor = 0.9) { return mark(r.eta_local, factor); }

struct SplitDirection {
  /// Direction of the cut line (unit).
  Vec2 direction;
  /// Eigenvector the cut is orthogonal to.
  Vec2 normal;
  /// Set when an anisotropic request fell back to the covariance direction.
  bool fallback = false;
};

/// Cut-line direction: orthogonal to the leading eigenvector of the
/// covariance (UNIFORM, ISOTROPIC) or of the Gram matrix (ANISOTROPIC). A zero
/// Gram matrix carries no direction and falls back to the covariance.
inline SplitDirection split_direction(const MeshElement& el, const Mat2* gram, Strategy strategy) {
  if (strategy == Strategy::Anisotropic && gram != nullptr) {
    if (gram->trace() > 0.0) {
      const SymmetricEigen2 e = symmetric_eigen(*gram);
      return {perp(e.u1), e.u1, false};
    }
    return {el.spectrum.u2, el.spectrum.u1, true};
  }
  return {el.spectrum.u2, el.spectrum.u1, false};
}

struct SkippedElement {
  int element;
  std::string reason;
};

struct RefinementStep {
  int level = 0;
  /// parent id -> {parent id (first child), new id (second child)}.
  std::vector<std::pair<int, std::array<int, 2>>> children;
  std::vector<int> new_nodes;
  /// Cut-line direction actually used, per split parent.
  std::vector<std::pair<int, Vec2>> directions;
  std::vector<SkippedElement> skipped;
};

struct RefineResult {
  PolyMesh mesh;
  RefinementStep step;
};

namespace detail {

/// Mutable copy of a mesh used while a refinement level is applied.
class MeshEditor {
 public:
  explicit MeshEditor(const PolyMesh& mesh) : loops_(mesh.loops()) {
    for (const auto& n : mesh.nodes()) {
      coords_.push_back(n.coords);
      tags_.push_back(n.tag);
    }
    for (std::size_t k = 0; k < loops_.size(); ++k) attach(static_cast<int>(k));
  }

  const std::vector<int>& loop(int k) const { return loops_[k]; }

  /// Splits element k; returns the new element id.
  int split(int k, const PolygonSplit& s, std::vector<int>& new_nodes) {
    const std::vector<int> old = loops_[k];
    detach(k);
    std::array<int, 2> cut_nodes{};
    for (int c = 0; c < 2; ++c) {
      const BoundaryHit& hit = s.cut[c];
      if (hit.vertex) {
        cut_nodes[c] = old[*hit.vertex];
        continue;
      }
      const int p = old[hit.edge];
      const int q = old[(hit.edge + 1) % old.size()];
      const auto neighbours = elements_of(p, q);
      const int m = static_cast<int>(coords_.size());
      coords_.push_back(hit.point);
      if (neighbours.empty()) {
        const bool dir = tags_[p] == BoundaryTag::dirichlet && tags_[q] == BoundaryTag::dirichlet;
        tags_.push_back(dir ? BoundaryTag::dirichlet : BoundaryTag::neumann);
      } else {
        tags_.push_back(BoundaryTag::interior);
      }
      new_nodes.push_back(m);
      cut_nodes[c] = m;
      for (int n : neighbours) {
        detach(n);
        auto& nl = loops_[n];
        for (std::size_t i = 0; i < nl.size(); ++i) {
          if (nl[i] == q && nl[(i + 1) % nl.size()] == p) {
            nl.insert(nl.begin() + static_cast<std::ptrdiff_t>(i + 1), m);
            break;
          }
        }
        attach(n);
      }
    }
    std::array<std::vector<int>, 2> pieces;
    for (int c = 0; c < 2; ++c) {
      for (std::ptrdiff_t idx : s.loops[c]) {
        if (idx == PolygonSplit::kCutStart) pieces[c].push_back(cut_nodes[0]);
        else if (idx == PolygonSplit::kCutEnd) pieces[c].push_back(cut_nodes[1]);
        else pieces[c].push_back(old[static_cast<std::size_t>(idx)]);
      }
    }
    loops_[k] = std::move(pieces[0]);
    attach(k);
    const int child = static_cast<int>(loops_.size());
    loops_.push_back(std::move(pieces[1]));
    attach(child);
    return child;
  }

  PolyMesh build() const {
    std::vector<MeshNode> nodes(coords_.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) nodes[i] = {coords_[i], tags_[i]};
    return PolyMesh(std::move(nodes), loops_);
  }

  Polygon polygon(int k) const {
    std::vector<Vec2> pts;
    for (int i : loops_[k]) pts.push_back(coords_[i]);
    return Polygon(std::move(pts));
  }

 private:
  std::vector<Vec2> coords_;
  std::vector<BoundaryTag> tags_;
  std::vector<std::vector<int>> loops_;
  std::unordered_map<std::uint64_t, std::vector<int>> edge_elements_;

  std::vector<int> elements_of(int a, int b) const {
    auto it = edge_elements_.find(edge_key(a, b));
    return it == edge_elements_.end() ? std::vector<int>{} : it->second;
  }
  void attach(int k) {
    const auto& l = loops_[k];
    for (std::size_t i = 0; i < l.size(); ++i) edge_elements_[edge_key(l[i], l[(i + 1) % l.size()])].push_back(k);
  }
  void detach(int k) {
    const auto& l = loops_[k];
    for (std::size_t i = 0; i < l.size(); ++i) {
      auto it = edge_elements_.find(edge_key(l[i], l[(i + 1) % l.size()]));
      if (it == edge_elements_.end()) continue;
      auto& v = it->second;
      v.erase(std::remove(v.begin(), v.end(), k), v.end());
      if (v.empty()) edge_elements_.erase(it);
    }
  }
};

}  // namespace detail

/// Bisects the marked elements (every element for UNIFORM) through their
/// centroids, in ascending id order. The first child keeps the parent id, the
/// second is appended. Cut points on shared edges become hanging nodes of the
/// neighbour. A failed cut is retried along the other eigenvector; if that
/// fails too the element is skipped and reported.
inline RefineResult refine(const PolyMesh& mesh, std::vector<int> marked, Strategy strategy,
                           const IndicatorReport* report = nullptr, double snap_tol = 1e-9) {
  if (strategy == Strategy::Uniform) {
    marked.resize(mesh.num_elements());
    for (std::size_t k = 0; k < marked.size(); ++k) marked[k] = static_cast<int>(k);
  }
  std::sort(marked.begin(), marked.end());
  marked.erase(std::unique(marked.begin(), marked.end()), marked.end());
  detail::MeshEditor editor(mesh);
  RefinementStep step;
  for (int k : marked) {
    if (k < 0 || static_cast<std::size_t>(k) >= mesh.num_elements()) {
      throw Error(ErrorKind::InvalidConfig, "marked element id out of range");
    }
    const MeshElement& el = mesh.element(k);
    const Mat2* gram = (report != nullptr && static_cast<std::size_t>(k) < report->gram.size()) ? &report->gram[k]
                                                                                                 : nullptr;
    const SplitDirection sd = split_direction(el, gram, strategy);
    const Polygon poly = editor.polygon(k);
    std::optional<PolygonSplit> split;
    Vec2 used = sd.direction;
    std::string reason;
    for (const Vec2& dir : {sd.direction, Vec2(perp(sd.direction))}) {
      try {
        split = split_polygon_by_line(poly, el.centroid(), dir, snap_tol);
        used = dir;
        break;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::CutMissesPolygon && e.kind() != ErrorKind::NonSimpleResult) throw;
        reason += std::string(reason.empty() ? "" : "; ") + e.what();
      }
    }
    if (!split) {
      step.skipped.push_back({k, reason});
      continue;
    }
    const int child = editor.split(k, *split, step.new_nodes);
    step.children.push_back({k, {k, child}});
    step.directions.emplace_back(k, used);
  }
  return {editor.build(), std::move(step)};
}

struct LevelResult {
  int level;
  PolyMesh mesh;
  IndicatorReport report;
  /// Refinement applied to this level's mesh to produce the next one.
  std::optional<RefinementStep> step;
};

/// Indicators, marking and refinement repeated up to config.max_levels times.
/// Every level is reported (through `on_level` as soon as it is complete); the
/// loop ends early when nothing is marked.
inline std::vector<LevelResult> adaptive_loop(const PolyMesh& initial, const ScalarField& v, const RefineConfig& config,
                                              const std::function<void(const LevelResult&)>& on_level = {}) {
  if (!(config.marking_factor > 0.0 && config.marking_factor <= 1.0)) {
    throw Error(ErrorKind::InvalidConfig, "marking_factor must lie in (0, 1]");
  }
  if (config.max_levels < 0) throw Error(ErrorKind::InvalidConfig, "max_levels must be non-negative");
  std::vector<LevelResult> levels;
  PolyMesh current = initial;
  for (int level = 0;; ++level) {
    IndicatorReport report = eta_global(current, v, config.quadrature);
    if (config.strategy == Strategy::Uniform) {
      report.marked.resize(current.num_elements());
      for (std::size_t k = 0; k < report.marked.size(); ++k) report.marked[k] = static_cast<int>(k);
    } else {
      report.marked = mark(report, config.marking_factor);
    }
    const bool last = level >= config.max_levels || report.marked.empty();
    std::optional<RefineResult> next;
    if (!last) {
      next.emplace(refine(current, report.marked, config.strategy, &report, config.snap_tol));
      next->step.level = level;
    }
    levels.push_back({level, current, std::move(report), next ? std::optional(next->step) : std::nullopt});
    if (on_level) on_level(levels.back());
    if (last) break;
    current = std::move(next->mesh);
  }
  return levels;
}

}  // namespace anisomesh
