#include "schwarz/fixtures.hpp"

#include "schwarz/error.hpp"
#include "schwarz/random.hpp"

#include <cmath>
#include <vector>

namespace schwarz {

Mesh grid_mesh(const GridMeshSpec& spec) {
  if (spec.nx < 1 || spec.ny < 1) throw ValidationError("grid needs at least one cell per direction");
  const double hx = (spec.x1 - spec.x0) / spec.nx;
  const double hy = (spec.y1 - spec.y0) / spec.ny;
  const int stride = spec.nx + 1;
  auto lattice = [&](int i, int j) { return Point{spec.x0 + i * hx, spec.y0 + j * hy}; };

  SplitMix rng(spec.seed);
  std::vector<int> index((spec.nx + 1) * (spec.ny + 1), -1);
  std::vector<std::array<int, 3>> lattice_tris;
  for (int j = 0; j < spec.ny; ++j) {
    for (int i = 0; i < spec.nx; ++i) {
      const Point center{spec.x0 + (i + 0.5) * hx, spec.y0 + (j + 0.5) * hy};
      const bool flip = spec.random_diagonals ? (rng.next() >> 63) != 0 : false;
      if (spec.keep_cell && !spec.keep_cell(center)) continue;
      const int a = j * stride + i, b = a + 1, c = a + stride + 1, d = a + stride;
      if (flip) {
        lattice_tris.push_back({a, b, d});
        lattice_tris.push_back({b, c, d});
      } else {
        lattice_tris.push_back({a, b, c});
        lattice_tris.push_back({a, c, d});
      }
    }
  }
  if (lattice_tris.empty()) throw ValidationError("grid mask removed every cell");

  Mesh mesh;
  // Mark used lattice points in one sweep, then number them row-major.
  std::vector<char> used(index.size(), 0);
  for (const auto& t : lattice_tris) {
    for (int v : t) used[v] = 1;
  }
  for (int j = 0; j <= spec.ny; ++j) {
    for (int i = 0; i <= spec.nx; ++i) {
      const int id = j * stride + i;
      if (!used[id]) continue;
      index[id] = mesh.num_vertices();
      mesh.vertices.push_back(lattice(i, j));
    }
  }
  for (const auto& t : lattice_tris) mesh.elements.push_back({index[t[0]], index[t[1]], index[t[2]]});

  mesh.boundary_marker.assign(mesh.vertices.size(), 0);
  for (const auto& [a, b] : boundary_edges(mesh)) {
    for (int v : {a, b}) {
      const int tag = spec.boundary_tag ? spec.boundary_tag(mesh.vertices[v]) : 1;
      if (tag <= 0) throw ValidationError("boundary tag callback returned a non-positive marker");
      mesh.boundary_marker[v] = tag;
    }
  }

  if (spec.jitter > 0.0) {
    for (int v = 0; v < mesh.num_vertices(); ++v) {
      const double dx = rng.uniform(-spec.jitter, spec.jitter) * hx;
      const double dy = rng.uniform(-spec.jitter, spec.jitter) * hy;
      if (mesh.boundary_marker[v] != 0) continue;
      mesh.vertices[v].x += dx;
      mesh.vertices[v].y += dy;
    }
  }
  normalize_orientation(mesh);
  validate_mesh(mesh);
  return mesh;
}

Mesh unit_square_mesh() {
  Mesh m;
  m.vertices = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  m.elements = {{0, 1, 2}, {0, 2, 3}};
  m.boundary_marker = {1, 1, 1, 1};
  return m;
}

Mesh square_with_center_mesh() {
  Mesh m;
  m.vertices = {{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0.5, 0.5}};
  m.elements = {{0, 1, 4}, {1, 2, 4}, {2, 3, 4}, {3, 0, 4}};
  m.boundary_marker = {1, 1, 1, 1, 0};
  return m;
}

Mesh octagon_demo_mesh() {
  Mesh m;
  m.vertices = {{2, 1},
                {1, 2},
                {0, 1},
                {1, 0},
                {1.70711, 1.70711},
                {1.70711, 0.292893},
                {0.292893, 0.292893},
                {0.292893, 1.70711},
                {1.11133, 0.731234},
                {0.849525, 1.36328},
                {1.44768, 1.19024},
                {0.54892, 0.81796}};
  // 1-based triangles of the reference drawing, converted below.
  const std::array<Triangle, 14> tris{{{1, 5, 11},
                                       {1, 11, 6},
                                       {2, 11, 5},
                                       {2, 8, 10},
                                       {2, 10, 11},
                                       {3, 7, 12},
                                       {3, 12, 8},
                                       {4, 6, 9},
                                       {4, 12, 7},
                                       {4, 9, 12},
                                       {6, 11, 9},
                                       {8, 12, 10},
                                       {9, 11, 10},
                                       {9, 10, 12}}};
  for (const auto& t : tris) m.elements.push_back({t[0] - 1, t[1] - 1, t[2] - 1});
  m.boundary_marker = {1, 1, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0};
  return m;
}

Mesh notched_rectangle_mesh(int nx, int ny, std::uint64_t seed) {
  GridMeshSpec spec;
  spec.x1 = 2.0;
  spec.nx = nx;
  spec.ny = ny;
  spec.jitter = 0.2;
  spec.random_diagonals = true;
  spec.seed = seed;
  spec.keep_cell = [](Point c) { return !(c.x > 0.8 && c.x < 1.2 && c.y > 0.5); };
  return grid_mesh(spec);
}

namespace {

bool near(double a, double b) { return std::abs(a - b) < 1e-9; }

} // namespace

Mesh channel_mesh(double length, int nx, int ny, double jitter, std::uint64_t seed) {
  GridMeshSpec spec;
  spec.x1 = length;
  spec.nx = nx;
  spec.ny = ny;
  spec.jitter = jitter;
  spec.random_diagonals = jitter > 0.0;
  spec.seed = seed;
  spec.boundary_tag = [length](Point p) {
    if (near(p.x, 0.0)) return 2;
    if (near(p.x, length) && !near(p.y, 0.0) && !near(p.y, 1.0)) return 3;
    return 1;
  };
  return grid_mesh(spec);
}

Mesh pipe_mesh(int cells_per_unit, std::uint64_t seed) {
  GridMeshSpec spec;
  spec.x1 = 5.0;
  spec.y1 = 2.0;
  spec.nx = 5 * cells_per_unit;
  spec.ny = 2 * cells_per_unit;
  spec.jitter = 0.2;
  spec.random_diagonals = true;
  spec.seed = seed;
  spec.keep_cell = [](Point c) { return !(c.x < 1.5 && c.y > 1.0); };
  spec.boundary_tag = [](Point p) {
    if (near(p.x, 0.0)) return 2;
    if (near(p.x, 5.0) && !near(p.y, 0.0) && !near(p.y, 2.0)) return 3;
    return 1;
  };
  return grid_mesh(spec);
}

Mesh random_rectangle_mesh(std::uint64_t seed, int min_cells, int max_cells) {
  SplitMix rng(hash_combine(seed, 0x5eedULL));
  GridMeshSpec spec;
  const auto span = static_cast<std::uint64_t>(max_cells - min_cells + 1);
  spec.nx = min_cells + static_cast<int>(rng.below(span));
  spec.ny = min_cells + static_cast<int>(rng.below(span));
  spec.x1 = rng.uniform(0.5, 2.0);
  spec.y1 = rng.uniform(0.5, 2.0);
  spec.jitter = 0.2;
  spec.random_diagonals = true;
  spec.seed = rng.next();
  return grid_mesh(spec);
}

} // namespace schwarz
