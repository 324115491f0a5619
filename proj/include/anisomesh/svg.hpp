#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "anisomesh/mesh.hpp"

namespace anisomesh {

struct SvgOptions {
  double width = 800.0;
  double margin = 10.0;
  double stroke_width = 0.5;
  /// Crop to this box (lo, hi) instead of the mesh bounding box.
  std::optional<std::pair<Vec2, Vec2>> zoom;
};

/// 8-stop viridis ramp, t in [0, 1].
inline std::string viridis(double t) {
  static constexpr std::array<std::array<int, 3>, 8> stops = {{{68, 1, 84},
                                                               {70, 50, 127},
                                                               {54, 92, 141},
                                                               {39, 127, 142},
                                                               {31, 161, 135},
                                                               {74, 194, 109},
                                                               {159, 218, 58},
                                                               {253, 231, 37}}};
  if (!std::isfinite(t)) t = 0.0;
  t = std::clamp(t, 0.0, 1.0) * 7.0;
  const int i = std::min(6, static_cast<int>(t));
  const double f = t - i;
  char buf[8];
  int c[3];
  for (int k = 0; k < 3; ++k) c[k] = static_cast<int>(std::lround(stops[i][k] + f * (stops[i + 1][k] - stops[i][k])));
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c[0], c[1], c[2]);
  return buf;
}

/// One closed path per element, optionally filled by a per-element scalar.
inline std::string render_svg(const PolyMesh& mesh, const std::vector<double>* values = nullptr,
                              const SvgOptions& opts = {}) {
  Vec2 lo, hi;
  if (opts.zoom) {
    lo = opts.zoom->first;
    hi = opts.zoom->second;
  } else {
    lo = hi = mesh.node(0).coords;
    for (const auto& n : mesh.nodes()) {
      lo = lo.cwiseMin(n.coords);
      hi = hi.cwiseMax(n.coords);
    }
  }
  const double span_x = std::max(hi.x() - lo.x(), 1e-300);
  const double span_y = std::max(hi.y() - lo.y(), 1e-300);
  const double scale = (opts.width - 2.0 * opts.margin) / span_x;
  const double height = span_y * scale + 2.0 * opts.margin;
  auto px = [&](const Vec2& p) {
    return Vec2(opts.margin + (p.x() - lo.x()) * scale, opts.margin + (hi.y() - p.y()) * scale);
  };
  double vmin = 0.0, vmax = 1.0;
  if (values != nullptr && !values->empty()) {
    vmin = *std::min_element(values->begin(), values->end());
    vmax = *std::max_element(values->begin(), values->end());
  }
  std::ostringstream out;
  char buf[128];
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.4f\" height=\"%.4f\" viewBox=\"0 0 %.4f %.4f\">\n",
                opts.width, height, opts.width, height);
  out << buf;
  if (opts.zoom) {
    std::snprintf(buf, sizeof buf,
                  "<defs><clipPath id=\"view\"><rect x=\"%.4f\" y=\"%.4f\" width=\"%.4f\" height=\"%.4f\"/></clipPath></defs>\n",
                  opts.margin, opts.margin, span_x * scale, span_y * scale);
    out << buf << "<g clip-path=\"url(#view)\">\n";
  } else {
    out << "<g>\n";
  }
  for (std::size_t k = 0; k < mesh.num_elements(); ++k) {
    out << "<path d=\"";
    const auto& loop = mesh.element(k).loop;
    for (std::size_t i = 0; i < loop.size(); ++i) {
      const Vec2 p = px(mesh.node(loop[i]).coords);
      std::snprintf(buf, sizeof buf, "%s%.4f %.4f ", i == 0 ? "M" : "L", p.x(), p.y());
      out << buf;
    }
    std::string fill = "none";
    if (values != nullptr && k < values->size()) {
      fill = viridis(vmax > vmin ? ((*values)[k] - vmin) / (vmax - vmin) : 0.5);
    }
    std::snprintf(buf, sizeof buf, "Z\" fill=\"%s\" stroke=\"black\" stroke-width=\"%.3f\"/>\n", fill.c_str(),
                  opts.stroke_width);
    out << buf;
  }
  out << "</g>\n</svg>\n";
  return out.str();
}

}  // namespace anisomesh
