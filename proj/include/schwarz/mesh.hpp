#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

namespace schwarz {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

inline Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
inline Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
inline Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }

double distance(Point a, Point b);

/// Twice the signed area of (a, b, c); positive when counter-clockwise.
double orient2d(Point a, Point b, Point c);

using Triangle = std::array<int, 3>;

/// Sorted vertex pair (first < second).
using Edge = std::pair<int, int>;

inline Edge make_edge(int a, int b) { return a < b ? Edge{a, b} : Edge{b, a}; }

/// Conforming 2D triangulation. Elements are counter-clockwise; a vertex
/// marker of 0 means interior, anything positive names a boundary segment.
struct Mesh {
  std::vector<Point> vertices;
  std::vector<Triangle> elements;
  std::vector<int> boundary_marker;

  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int num_elements() const { return static_cast<int>(elements.size()); }

  double signed_area(int element) const;
  Point centroid(int element) const;
  double total_area() const;
  int num_interior_vertices() const;
};

/// Checks every Mesh invariant; throws ValidationError naming the first
/// offending element or vertex.
void validate_mesh(const Mesh& mesh);

/// Reorders clockwise elements to counter-clockwise in place.
void normalize_orientation(Mesh& mesh);

/// Unique edges sorted lexicographically.
std::vector<Edge> unique_edges(const Mesh& mesh);

/// Edges referenced by exactly one element, sorted.
std::vector<Edge> boundary_edges(const Mesh& mesh);

/// For each vertex, the sorted ids of incident elements.
std::vector<std::vector<int>> vertex_elements(const Mesh& mesh);

/// Smallest interior angle over all elements, in degrees.
double min_angle_deg(const Mesh& mesh);

// ---------------------------------------------------------------------------
// File I/O: Triangle-style .node/.ele pairs.

Mesh load_mesh(const std::filesystem::path& node_path, const std::filesystem::path& ele_path);

/// Loads `<base>.node` and `<base>.ele`.
Mesh load_mesh(const std::filesystem::path& base);

/// Writes `<base>.node` and `<base>.ele`; coordinates use shortest
/// round-trip formatting so a reload is bit-exact.
void save_mesh(const Mesh& mesh, const std::filesystem::path& base);

// ---------------------------------------------------------------------------
// Degrees of freedom.

/// Number of unknowns on vertex-, edge- and cell-nodes.
struct DofLayout {
  std::array<int, 3> z{1, 0, 0};

  friend bool operator==(const DofLayout&, const DofLayout&) = default;
};

void validate_layout(const DofLayout& layout);

struct DofNode {
  Point coords;
  int dim = 0;        ///< 0 vertex, 1 edge midpoint, 2 cell centroid
  int entity = 0;     ///< vertex, edge or element id the node sits on
  int dof_start = 0;
};

/// Geometric nodes and unknown numbering for a layout. Nodes are ordered
/// vertices (by id), then edges (sorted endpoint pairs), then cells (by id);
/// node n owns z[dim] consecutive unknowns starting at dof_start.
struct DofMap {
  DofLayout layout;
  std::vector<DofNode> nodes;
  int total_dofs = 0;

  std::vector<Edge> edges;
  std::vector<Triangle> element_vertices;
  /// Local edge k of an element is opposite its local vertex k.
  std::vector<std::array<int, 3>> element_edges;

  int num_vertices = 0;
  int num_elements = 0;

  int dofs_per_node(int node) const { return layout.z[nodes[node].dim]; }

  /// Node id of a vertex/edge/cell, or -1 when the layout places nothing there.
  int vertex_node(int v) const;
  int edge_node(int e) const;
  int cell_node(int k) const;

  /// Nodes attached to an element, in local order: vertices, edges, cell.
  std::vector<int> element_nodes(int element) const;

  /// For every node, the smallest incident element id.
  std::vector<int> node_first_element() const;
};

DofMap build_dof_map(const Mesh& mesh, const DofLayout& layout);

// ---------------------------------------------------------------------------
// Domain decomposition.

struct Partition {
  int np = 1;
  int delta = 0;
  std::vector<int> owner;                          ///< per element
  std::vector<std::vector<int>> overlap_elements;  ///< per subdomain, sorted
  /// Bisection axis of every recursion node in preorder (0 = x, 1 = y);
  /// empty when the partition was not produced by bisection.
  std::vector<char> cut_axes;

  std::vector<std::vector<int>> owned_elements() const;
};

/// Recursive coordinate bisection of element centroids, splitting the longer
/// side of each centroid box. Ties in the bisection coordinate are broken by
/// a seeded hash of the element id.
Partition partition_mesh(const Mesh& mesh, int np, std::uint64_t seed);

/// Bisection that replays the cut axes of `reference` (same np) instead of
/// choosing them, so subdomain p covers the same region on meshes of the
/// same domain. Cut positions still balance this mesh's element counts.
Partition partition_like(const Mesh& mesh, const Partition& reference, std::uint64_t seed);

/// Returns a copy whose overlap sets are the owner sets grown by `delta`
/// layers of vertex-adjacent elements.
Partition extend_overlap(const Mesh& mesh, const Partition& partition, int delta);

/// Per-subdomain unknown lists for a DofMap.
struct SubdomainDofs {
  /// Unknowns owned by each subdomain; disjoint and covering. A node is
  /// owned by the subdomain owning its smallest incident element.
  std::vector<std::vector<int>> owned;
  /// Unknowns of every node touching the owned elements (overlap 0).
  std::vector<std::vector<int>> interior;
  /// Unknowns of every node touching the overlap-delta elements.
  std::vector<std::vector<int>> overlap;
  /// Owning subdomain for each node.
  std::vector<int> node_owner;
};

SubdomainDofs subdomain_dofs(const DofMap& dofmap, const Partition& partition);

// ---------------------------------------------------------------------------

struct VertexGraph {
  std::vector<int> interior_vertices;
  std::vector<std::vector<int>> adjacency;  ///< sorted neighbor lists
};

VertexGraph vertex_graph(const Mesh& mesh);

} // namespace schwarz
