#pragma once

#include "schwarz/mesh.hpp"

#include <cstdint>
#include <functional>

namespace schwarz {

/// Structured lattice over a rectangle, optionally masked, with jittered
/// interior vertices and randomly chosen cell diagonals. Produces the
/// perturbed unstructured meshes used as benchmark fixtures.
struct GridMeshSpec {
  double x0 = 0.0, y0 = 0.0, x1 = 1.0, y1 = 1.0;
  int nx = 8, ny = 8;
  double jitter = 0.0;  ///< interior vertex displacement, fraction of cell size (< 0.25)
  bool random_diagonals = false;
  std::uint64_t seed = 0;
  /// Keeps the cell whose center is given; empty keeps all cells.
  std::function<bool(Point)> keep_cell;
  /// Marker for a boundary vertex; empty marks every boundary vertex 1.
  std::function<int(Point)> boundary_tag;
};

Mesh grid_mesh(const GridMeshSpec& spec);

/// Unit square split along its (0,0)-(1,1) diagonal: 4 vertices, 2 elements.
Mesh unit_square_mesh();

/// Unit square with a center vertex: 5 vertices, 4 elements.
Mesh square_with_center_mesh();

/// Octagon with four interior vertices (12 vertices, 14 elements); the
/// small demonstration mesh used to illustrate one coarsening sweep.
Mesh octagon_demo_mesh();

/// [0,2]x[0,1] with a rectangular notch cut from the top edge. All boundary
/// vertices carry marker 1. Convection-diffusion fixture.
Mesh notched_rectangle_mesh(int nx, int ny, std::uint64_t seed);

/// Straight channel [0,length]x[0,1]; inlet x=0 (marker 2), outlet
/// x=length (marker 3), walls (marker 1).
Mesh channel_mesh(double length, int nx, int ny, double jitter, std::uint64_t seed);

/// Pipe with a sudden expansion: inlet x=0, y in [0,1] (marker 2), widening
/// to [0,2] at x=1.5, outlet x=5 (marker 3), walls (marker 1). `cells_per_unit`
/// lattice cells per unit length.
Mesh pipe_mesh(int cells_per_unit, std::uint64_t seed);

/// Randomly sized jittered rectangle; used by property suites.
Mesh random_rectangle_mesh(std::uint64_t seed, int min_cells = 4, int max_cells = 14);

} // namespace schwarz
