#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "anisomesh/mesh.hpp"

namespace anisomesh {

/// Structured quads on (0,1)^2 with seeded jitter of the interior vertices
/// (as a fraction of the cell size, |jitter| < 0.5), then random merges of
/// horizontally adjacent cell pairs into hexagons with probability merge_prob.
inline PolyMesh polygonal_mesh(int nx, int ny, double jitter, std::uint64_t seed, double merge_prob = 0.0,
                               const BoundarySpec& spec = {}) {
  if (nx < 1 || ny < 1) throw Error(ErrorKind::InvalidConfig, "polygonal mesh needs at least one cell per direction");
  if (!(jitter >= 0.0 && jitter < 0.5)) throw Error(ErrorKind::InvalidConfig, "jitter must lie in [0, 0.5)");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> offset(-jitter, jitter);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  const double hx = 1.0 / nx, hy = 1.0 / ny;
  std::vector<Vec2> coords;
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      Vec2 p(i * hx, j * hy);
      if (i > 0 && i < nx && j > 0 && j < ny) {
        // Draw in a fixed order so the result does not depend on evaluation order.
        const double dx = offset(rng);
        const double dy = offset(rng);
        p += Vec2(dx * hx, dy * hy);
      }
      coords.push_back(p);
    }
  }
  auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
  std::vector<std::vector<int>> loops;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      std::vector<int> quad = {id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)};
      if (merge_prob > 0.0 && i + 1 < nx && coin(rng) < merge_prob) {
        loops.push_back({id(i, j), id(i + 1, j), id(i + 2, j), id(i + 2, j + 1), id(i + 1, j + 1), id(i, j + 1)});
        ++i;
        continue;
      }
      loops.push_back(std::move(quad));
    }
  }
  return build_mesh(coords, loops, spec);
}

}  // namespace anisomesh
