#pragma once

#include "schwarz/linalg.hpp"
#include "schwarz/mesh.hpp"
#include "schwarz/transfer.hpp"

#include <functional>
#include <string>

namespace schwarz {

struct LinearSystem {
  CsrMatrix J;
  Vector b;
  DofMap dofmap;
};

/// -lap(u) + beta v0 . grad(u) = f with u = 0 on the whole boundary.
struct ConvDiffParams {
  double beta = 1.0;
  Point v0{1.0, 0.0};
  double f = 1.0;
};

/// Cell-centered finite volumes, one unknown per cell. Two-point diffusive
/// flux |e| / |x_K - x_L| between centroids (centroid to edge midpoint on
/// the boundary, against a zero ghost value) and first-order upwinding of
/// beta v0 . n.
LinearSystem assemble_convdiff(const Mesh& mesh, const ConvDiffParams& params);

/// Boundary markers used by the Stokes assembly.
inline constexpr int kWallTag = 1;
inline constexpr int kInletTag = 2;
inline constexpr int kOutletTag = 3;

struct StokesParams {
  double nu = 1.0 / 1000.0;
  std::function<Point(Point)> inlet = [](Point p) { return Point{4.0 * (1.0 - p.y) * p.y, 0.0}; };
  /// Prescribed sigma . n on the outlet; empty means the natural zero traction.
  std::function<Point(Point)> outlet_traction;
};

void validate_stokes_params(const StokesParams& params);

/// Taylor-Hood P2-P1 with layout (3,2,0): unknowns (u, v, p) on vertices and
/// (u, v) on edge midpoints. Viscous form nu (grad u + grad u^T) : grad v,
/// pressure coupling -p div v and -q div u, explicit zero pressure diagonal.
/// Velocity unknowns on wall and inlet nodes become identity rows. A boundary
/// edge is an outlet edge when either endpoint carries the outlet marker,
/// otherwise inlet when either endpoint is an inlet vertex, otherwise wall.
/// Throws ValidationError when a marker is absent from the mesh.
LinearSystem assemble_stokes(const Mesh& mesh, const StokesParams& params);

/// Boundary class of every node for the Stokes layout (0 interior).
std::vector<int> stokes_node_tags(const Mesh& mesh, const DofMap& dofmap);

/// A discretized problem family member: what unknowns it places and how to
/// assemble it on any mesh of the domain.
struct Discretization {
  std::string name;
  DofLayout layout;
  FieldSplit split;
  std::function<LinearSystem(const Mesh&)> assemble;
};

Discretization convdiff_problem(const ConvDiffParams& params);
Discretization stokes_problem(const StokesParams& params);

} // namespace schwarz
