#pragma once

#include "schwarz/mesh.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace schwarz {

/// Independent set of interior vertices that cannot be enlarged.
struct MisResult {
  std::vector<int> selected;  ///< sorted vertex ids
};

/// Luby-style maximal independent set over the interior vertices of the
/// graph. Each vertex gets a seeded 64-bit priority (ties broken by id); in
/// every round the undecided local maxima join the set and their neighbors
/// drop out. Deterministic for a fixed seed regardless of worker count.
MisResult maximal_independent_set(const VertexGraph& graph, std::uint64_t seed);

/// Empty string when `mis` is independent and maximal over the graph's
/// interior vertices, otherwise a description of the first violation.
std::string check_mis(const VertexGraph& graph, const MisResult& mis);

/// Star of a removed vertex and the counter-clockwise loop bounding it.
struct Cavity {
  int removed_vertex = -1;
  std::vector<int> deleted_elements;  ///< sorted
  std::vector<int> boundary_loop;     ///< counter-clockwise vertex cycle
};

struct CarveResult {
  std::vector<int> remaining;        ///< sorted element ids
  std::vector<Cavity> cavities;      ///< in MIS order
  std::vector<int> skipped_vertices; ///< non-manifold stars, kept in the mesh
};

CarveResult carve_cavities(const Mesh& mesh, const MisResult& mis);

/// Fills a cavity loop with triangles over the loop vertices only, choosing
/// among all valid triangulations one that maximizes the smallest angle.
/// Throws GeometryError when none exists (collinear loops).
std::vector<Triangle> retriangulate_cavity(const Cavity& cavity, const Mesh& mesh);

struct CoarsenConfig {
  int max_rounds = 4;
  std::uint64_t seed = 0;
  bool rebalance = true;
};

struct RoundStats {
  int round = 0;
  int num_vertices = 0;
  int num_elements = 0;
  double min_angle_deg = 0.0;
  int removed = 0;
};

struct CoarsenOnceResult {
  Mesh mesh;
  std::vector<int> owner;  ///< subdomain of each output element
  int removed = 0;
  std::vector<int> skipped_vertices;  ///< ids in the input mesh
};

/// One sweep: MIS, carve, retriangulate, compact. Cavities are processed per
/// subdomain on the worker pool; failed cavities keep their vertex. Surviving
/// elements come first in input order, then the fill triangles.
CoarsenOnceResult coarsen_once(const Mesh& mesh, const Partition& partition, std::uint64_t seed);

/// Same sweep with a caller-supplied independent set.
CoarsenOnceResult coarsen_once(const Mesh& mesh, const Partition& partition, const MisResult& mis);

struct CoarsenResult {
  Mesh mesh;
  std::vector<RoundStats> rounds;  ///< rounds[0] describes the input mesh
  Partition partition;             ///< repartitioned coarse mesh when rebalancing
};

/// Up to max_rounds sweeps; stops early once no interior vertex can be removed.
/// The returned partition has the input's np and delta.
CoarsenResult coarsen(const Mesh& mesh, const Partition& partition, const CoarsenConfig& config);

/// One line per round: "round NV NE min_angle_deg".
std::string format_round_stats(const std::vector<RoundStats>& rounds);

} // namespace schwarz
