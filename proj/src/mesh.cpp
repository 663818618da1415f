#include "schwarz/mesh.hpp"

#include "schwarz/error.hpp"
#include "schwarz/random.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <unordered_map>

namespace schwarz {

double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

double orient2d(Point a, Point b, Point c) {
  return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

double Mesh::signed_area(int element) const {
  const auto& t = elements[element];
  return 0.5 * orient2d(vertices[t[0]], vertices[t[1]], vertices[t[2]]);
}

Point Mesh::centroid(int element) const {
  const auto& t = elements[element];
  const Point a = vertices[t[0]], b = vertices[t[1]], c = vertices[t[2]];
  return {(a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0};
}

double Mesh::total_area() const {
  double sum = 0.0;
  for (int k = 0; k < num_elements(); ++k) sum += signed_area(k);
  return sum;
}

int Mesh::num_interior_vertices() const {
  return static_cast<int>(std::count(boundary_marker.begin(), boundary_marker.end(), 0));
}

namespace {

std::int64_t edge_key(Edge e, int nv) {
  return static_cast<std::int64_t>(e.first) * nv + e.second;
}

double bbox_area(const Mesh& mesh) {
  if (mesh.vertices.empty()) return 0.0;
  double xmin = mesh.vertices[0].x, xmax = xmin, ymin = mesh.vertices[0].y, ymax = ymin;
  for (const auto& p : mesh.vertices) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  return (xmax - xmin) * (ymax - ymin);
}

} // namespace

void validate_mesh(const Mesh& mesh) {
  const int nv = mesh.num_vertices();
  if (static_cast<int>(mesh.boundary_marker.size()) != nv) {
    throw ValidationError("mesh has " + std::to_string(nv) + " vertices but " +
                          std::to_string(mesh.boundary_marker.size()) + " boundary markers");
  }
  if (mesh.elements.empty()) throw ValidationError("mesh has no elements");

  std::vector<char> referenced(nv, 0);
  for (int k = 0; k < mesh.num_elements(); ++k) {
    const auto& t = mesh.elements[k];
    for (int v : t) {
      if (v < 0 || v >= nv) {
        throw ValidationError("element " + std::to_string(k) + " references vertex " +
                              std::to_string(v) + " but the mesh has " + std::to_string(nv) +
                              " vertices");
      }
      referenced[v] = 1;
    }
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) {
      throw ValidationError("element " + std::to_string(k) + " repeats a vertex");
    }
  }
  for (int v = 0; v < nv; ++v) {
    if (!referenced[v]) {
      throw ValidationError("vertex " + std::to_string(v) + " is not referenced by any element");
    }
    if (mesh.boundary_marker[v] < 0) {
      throw ValidationError("vertex " + std::to_string(v) + " has a negative boundary marker");
    }
  }

  const double min_area = 1e-14 * bbox_area(mesh);
  for (int k = 0; k < mesh.num_elements(); ++k) {
    const double a = mesh.signed_area(k);
    if (a <= 0.0) {
      throw ValidationError("element " + std::to_string(k) + " is inverted (signed area " +
                            std::to_string(a) + ")");
    }
    if (a <= min_area) {
      throw ValidationError("element " + std::to_string(k) + " is degenerate (area " +
                            std::to_string(a) + ")");
    }
  }

  std::unordered_map<std::int64_t, int> edge_count;
  edge_count.reserve(3 * mesh.elements.size());
  for (const auto& t : mesh.elements) {
    for (int i = 0; i < 3; ++i) ++edge_count[edge_key(make_edge(t[i], t[(i + 1) % 3]), nv)];
  }
  for (int k = 0; k < mesh.num_elements(); ++k) {
    const auto& t = mesh.elements[k];
    for (int i = 0; i < 3; ++i) {
      const Edge e = make_edge(t[i], t[(i + 1) % 3]);
      const int count = edge_count[edge_key(e, nv)];
      if (count > 2) {
        throw ValidationError("element " + std::to_string(k) + ": edge (" +
                              std::to_string(e.first) + "," + std::to_string(e.second) +
                              ") is shared by " + std::to_string(count) + " elements");
      }
      if (count == 1 &&
          (mesh.boundary_marker[e.first] == 0 || mesh.boundary_marker[e.second] == 0)) {
        throw ValidationError("element " + std::to_string(k) + ": boundary edge (" +
                              std::to_string(e.first) + "," + std::to_string(e.second) +
                              ") has an endpoint marked interior");
      }
    }
  }
}

void normalize_orientation(Mesh& mesh) {
  for (int k = 0; k < mesh.num_elements(); ++k) {
    if (mesh.signed_area(k) < 0.0) std::swap(mesh.elements[k][1], mesh.elements[k][2]);
  }
}

std::vector<Edge> unique_edges(const Mesh& mesh) {
  std::vector<Edge> edges;
  edges.reserve(3 * mesh.elements.size());
  for (const auto& t : mesh.elements) {
    for (int i = 0; i < 3; ++i) edges.push_back(make_edge(t[i], t[(i + 1) % 3]));
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

std::vector<Edge> boundary_edges(const Mesh& mesh) {
  std::vector<Edge> edges;
  edges.reserve(3 * mesh.elements.size());
  for (const auto& t : mesh.elements) {
    for (int i = 0; i < 3; ++i) edges.push_back(make_edge(t[i], t[(i + 1) % 3]));
  }
  std::sort(edges.begin(), edges.end());
  std::vector<Edge> result;
  for (std::size_t i = 0; i < edges.size();) {
    std::size_t j = i;
    while (j < edges.size() && edges[j] == edges[i]) ++j;
    if (j - i == 1) result.push_back(edges[i]);
    i = j;
  }
  return result;
}

std::vector<std::vector<int>> vertex_elements(const Mesh& mesh) {
  std::vector<std::vector<int>> result(mesh.vertices.size());
  for (int k = 0; k < mesh.num_elements(); ++k) {
    for (int v : mesh.elements[k]) result[v].push_back(k);
  }
  return result;
}

double min_angle_deg(const Mesh& mesh) {
  constexpr double rad_to_deg = 180.0 / 3.14159265358979323846;
  double best = 180.0;
  for (const auto& t : mesh.elements) {
    for (int i = 0; i < 3; ++i) {
      const Point a = mesh.vertices[t[i]];
      const Point b = mesh.vertices[t[(i + 1) % 3]];
      const Point c = mesh.vertices[t[(i + 2) % 3]];
      const Point u = b - a, w = c - a;
      const double angle = std::atan2(std::abs(u.x * w.y - u.y * w.x), u.x * w.x + u.y * w.y);
      best = std::min(best, angle * rad_to_deg);
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// I/O

namespace {

struct LineReader {
  std::ifstream in;
  std::string path;
  int line_no = 0;

  explicit LineReader(const std::filesystem::path& p) : in(p), path(p.string()) {
    if (!in) throw ParseError("cannot open " + path);
  }

  /// Next non-blank, non-comment line split into tokens; false at EOF.
  bool next(std::vector<std::string>& tokens) {
    std::string line;
    while (std::getline(in, line)) {
      ++line_no;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      std::istringstream ss(line);
      tokens.clear();
      for (std::string tok; ss >> tok;) tokens.push_back(tok);
      if (!tokens.empty()) return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(path + ":" + std::to_string(line_no) + ": " + what);
  }

  template <typename T>
  T number(const std::string& tok) const {
    T value{};
    const auto* first = tok.data();
    const auto* last = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last) fail("expected a number, got '" + tok + "'");
    return value;
  }
};

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

} // namespace

Mesh load_mesh(const std::filesystem::path& node_path, const std::filesystem::path& ele_path) {
  Mesh mesh;
  std::vector<std::string> tok;

  {
    LineReader r(node_path);
    if (!r.next(tok)) r.fail("missing header");
    if (tok.size() != 4) r.fail("node header must be '<NV> 2 0 1'");
    const int nv = r.number<int>(tok[0]);
    if (nv < 0 || r.number<int>(tok[1]) != 2 || r.number<int>(tok[2]) != 0 ||
        r.number<int>(tok[3]) != 1) {
      r.fail("node header must be '<NV> 2 0 1'");
    }
    mesh.vertices.reserve(nv);
    mesh.boundary_marker.reserve(nv);
    for (int i = 0; i < nv; ++i) {
      if (!r.next(tok)) r.fail("expected " + std::to_string(nv) + " vertices, found " + std::to_string(i));
      if (tok.size() != 4) r.fail("vertex line must be '<id> <x> <y> <marker>'");
      if (r.number<int>(tok[0]) != i) r.fail("vertex id " + tok[0] + " out of sequence (expected " + std::to_string(i) + ")");
      mesh.vertices.push_back({r.number<double>(tok[1]), r.number<double>(tok[2])});
      mesh.boundary_marker.push_back(r.number<int>(tok[3]));
    }
    if (r.next(tok)) r.fail("trailing data after " + std::to_string(nv) + " vertices");
  }

  {
    LineReader r(ele_path);
    if (!r.next(tok)) r.fail("missing header");
    if (tok.size() != 3) r.fail("element header must be '<NE> 3 0'");
    const int ne = r.number<int>(tok[0]);
    if (ne < 0 || r.number<int>(tok[1]) != 3 || r.number<int>(tok[2]) != 0) {
      r.fail("element header must be '<NE> 3 0'");
    }
    mesh.elements.reserve(ne);
    for (int i = 0; i < ne; ++i) {
      if (!r.next(tok)) r.fail("expected " + std::to_string(ne) + " elements, found " + std::to_string(i));
      if (tok.size() != 4) r.fail("element line must be '<id> <v0> <v1> <v2>'");
      if (r.number<int>(tok[0]) != i) r.fail("element id " + tok[0] + " out of sequence (expected " + std::to_string(i) + ")");
      mesh.elements.push_back({r.number<int>(tok[1]), r.number<int>(tok[2]), r.number<int>(tok[3])});
    }
    if (r.next(tok)) r.fail("trailing data after " + std::to_string(ne) + " elements");
  }

  // Orientation can only be normalized once references are known to be valid.
  for (int k = 0; k < mesh.num_elements(); ++k) {
    for (int v : mesh.elements[k]) {
      if (v < 0 || v >= mesh.num_vertices()) {
        throw ValidationError(ele_path.string() + ": element " + std::to_string(k) +
                              " references vertex " + std::to_string(v) + " but the mesh has " +
                              std::to_string(mesh.num_vertices()) + " vertices");
      }
    }
  }
  normalize_orientation(mesh);
  validate_mesh(mesh);
  return mesh;
}

Mesh load_mesh(const std::filesystem::path& base) {
  auto node = base;
  auto ele = base;
  node += ".node";
  ele += ".ele";
  return load_mesh(node, ele);
}

void save_mesh(const Mesh& mesh, const std::filesystem::path& base) {
  auto node = base;
  auto ele = base;
  node += ".node";
  ele += ".ele";
  {
    std::ofstream out(node);
    if (!out) throw ParseError("cannot write " + node.string());
    out << mesh.num_vertices() << " 2 0 1\n";
    for (int i = 0; i < mesh.num_vertices(); ++i) {
      out << i << ' ' << format_double(mesh.vertices[i].x) << ' '
          << format_double(mesh.vertices[i].y) << ' ' << mesh.boundary_marker[i] << '\n';
    }
  }
  {
    std::ofstream out(ele);
    if (!out) throw ParseError("cannot write " + ele.string());
    out << mesh.num_elements() << " 3 0\n";
    for (int k = 0; k < mesh.num_elements(); ++k) {
      const auto& t = mesh.elements[k];
      out << k << ' ' << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// DoFs

void validate_layout(const DofLayout& layout) {
  for (int z : layout.z) {
    if (z < 0) throw ValidationError("DoF layout entries must be non-negative");
  }
  if (layout.z[0] + layout.z[1] + layout.z[2] == 0) {
    throw ValidationError("DoF layout must place at least one unknown");
  }
}

int DofMap::vertex_node(int v) const { return layout.z[0] > 0 ? v : -1; }

int DofMap::edge_node(int e) const {
  if (layout.z[1] == 0) return -1;
  return (layout.z[0] > 0 ? num_vertices : 0) + e;
}

int DofMap::cell_node(int k) const {
  if (layout.z[2] == 0) return -1;
  return (layout.z[0] > 0 ? num_vertices : 0) +
         (layout.z[1] > 0 ? static_cast<int>(edges.size()) : 0) + k;
}

std::vector<int> DofMap::element_nodes(int element) const {
  std::vector<int> result;
  result.reserve(7);
  if (layout.z[0] > 0) {
    for (int i = 0; i < 3; ++i) {
      result.push_back(vertex_node(element_vertices[element][i]));
    }
  }
  if (layout.z[1] > 0) {
    for (int i = 0; i < 3; ++i) result.push_back(edge_node(element_edges[element][i]));
  }
  if (layout.z[2] > 0) result.push_back(cell_node(element));
  return result;
}

std::vector<int> DofMap::node_first_element() const {
  std::vector<int> first(nodes.size(), -1);
  for (int k = 0; k < num_elements; ++k) {
    for (int n : element_nodes(k)) {
      if (first[n] < 0) first[n] = k;
    }
  }
  return first;
}

DofMap build_dof_map(const Mesh& mesh, const DofLayout& layout) {
  validate_layout(layout);
  DofMap map;
  map.layout = layout;
  map.num_vertices = mesh.num_vertices();
  map.num_elements = mesh.num_elements();
  map.edges = unique_edges(mesh);
  map.element_vertices = mesh.elements;

  const int nv = mesh.num_vertices();
  std::unordered_map<std::int64_t, int> edge_index;
  edge_index.reserve(map.edges.size());
  for (int e = 0; e < static_cast<int>(map.edges.size()); ++e) {
    edge_index.emplace(edge_key(map.edges[e], nv), e);
  }
  map.element_edges.resize(mesh.elements.size());
  for (int k = 0; k < mesh.num_elements(); ++k) {
    const auto& t = mesh.elements[k];
    for (int i = 0; i < 3; ++i) {
      map.element_edges[k][i] = edge_index.at(edge_key(make_edge(t[(i + 1) % 3], t[(i + 2) % 3]), nv));
    }
  }

  int next = 0;
  auto add = [&](Point p, int dim, int entity) {
    map.nodes.push_back({p, dim, entity, next});
    next += layout.z[dim];
  };
  if (layout.z[0] > 0) {
    for (int v = 0; v < nv; ++v) add(mesh.vertices[v], 0, v);
  }
  if (layout.z[1] > 0) {
    for (int e = 0; e < static_cast<int>(map.edges.size()); ++e) {
      const auto [a, b] = map.edges[e];
      add(0.5 * (mesh.vertices[a] + mesh.vertices[b]), 1, e);
    }
  }
  if (layout.z[2] > 0) {
    for (int k = 0; k < mesh.num_elements(); ++k) add(mesh.centroid(k), 2, k);
  }
  map.total_dofs = next;
  return map;
}

// ---------------------------------------------------------------------------
// Partitioning

std::vector<std::vector<int>> Partition::owned_elements() const {
  std::vector<std::vector<int>> sets(np);
  for (int k = 0; k < static_cast<int>(owner.size()); ++k) sets[owner[k]].push_back(k);
  return sets;
}

namespace {

struct Bisector {
  const std::vector<Point>& centroids;
  const std::vector<std::uint64_t>& tie;
  std::vector<int>& owner;
  std::vector<char>& axes;
  const std::vector<char>* replay = nullptr;
  std::size_t next_axis = 0;
};

void bisect(std::vector<int>& elems, std::size_t begin, std::size_t end, int parts, int first_part, Bisector& b) {
  const auto& centroids = b.centroids;
  const auto& tie = b.tie;
  if (parts == 1) {
    auto& owner = b.owner;
    for (std::size_t i = begin; i < end; ++i) owner[elems[i]] = first_part;
    return;
  }
  double xmin = std::numeric_limits<double>::max(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (std::size_t i = begin; i < end; ++i) {
    const Point c = centroids[elems[i]];
    xmin = std::min(xmin, c.x);
    xmax = std::max(xmax, c.x);
    ymin = std::min(ymin, c.y);
    ymax = std::max(ymax, c.y);
  }
  bool split_x = (xmax - xmin) >= (ymax - ymin);
  if (b.replay) split_x = (*b.replay)[b.next_axis] == 0;
  ++b.next_axis;
  b.axes.push_back(split_x ? 0 : 1);
  std::sort(elems.begin() + begin, elems.begin() + end, [&](int a, int b) {
    const double ca = split_x ? centroids[a].x : centroids[a].y;
    const double cb = split_x ? centroids[b].x : centroids[b].y;
    if (ca != cb) return ca < cb;
    if (tie[a] != tie[b]) return tie[a] < tie[b];
    return a < b;
  });
  const int left_parts = parts / 2;
  const std::size_t n = end - begin;
  const std::size_t n_left = n * left_parts / parts;
  bisect(elems, begin, begin + n_left, left_parts, first_part, b);
  bisect(elems, begin + n_left, end, parts - left_parts, first_part + left_parts, b);
}

} // namespace

namespace {

Partition bisect_mesh(const Mesh& mesh, int np, std::uint64_t seed, const std::vector<char>* replay) {
  const int ne = mesh.num_elements();
  if (np < 1 || np > ne) {
    throw ValidationError("cannot partition " + std::to_string(ne) + " elements into " +
                          std::to_string(np) + " subdomains");
  }
  std::vector<Point> centroids(ne);
  std::vector<std::uint64_t> tie(ne);
  for (int k = 0; k < ne; ++k) {
    centroids[k] = mesh.centroid(k);
    tie[k] = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(k)));
  }
  std::vector<int> elems(ne);
  std::iota(elems.begin(), elems.end(), 0);

  Partition part;
  part.np = np;
  part.owner.assign(ne, 0);
  Bisector b{centroids, tie, part.owner, part.cut_axes, replay};
  bisect(elems, 0, elems.size(), np, 0, b);
  part.overlap_elements = part.owned_elements();
  return part;
}

} // namespace

Partition partition_mesh(const Mesh& mesh, int np, std::uint64_t seed) { return bisect_mesh(mesh, np, seed, nullptr); }

Partition partition_like(const Mesh& mesh, const Partition& reference, std::uint64_t seed) {
  if (reference.cut_axes.size() != static_cast<std::size_t>(reference.np - 1)) {
    throw ValidationError("reference partition carries no bisection axes");
  }
  return bisect_mesh(mesh, reference.np, seed, &reference.cut_axes);
}

Partition extend_overlap(const Mesh& mesh, const Partition& partition, int delta) {
  if (delta < 0) throw ValidationError("overlap must be non-negative");
  Partition result = partition;
  result.delta = delta;
  result.overlap_elements = partition.owned_elements();
  if (delta == 0) return result;

  const auto incident = vertex_elements(mesh);
  const int ne = mesh.num_elements();
  for (int p = 0; p < partition.np; ++p) {
    std::vector<char> in_set(ne, 0);
    std::vector<int> current = result.overlap_elements[p];
    for (int k : current) in_set[k] = 1;
    for (int layer = 0; layer < delta; ++layer) {
      std::vector<char> touched(mesh.num_vertices(), 0);
      for (int k : current) {
        for (int v : mesh.elements[k]) touched[v] = 1;
      }
      std::vector<int> grown;
      for (int v = 0; v < mesh.num_vertices(); ++v) {
        if (!touched[v]) continue;
        for (int k : incident[v]) {
          if (!in_set[k]) {
            in_set[k] = 1;
            grown.push_back(k);
          }
        }
      }
      if (grown.empty()) break;
      current.insert(current.end(), grown.begin(), grown.end());
    }
    std::sort(current.begin(), current.end());
    result.overlap_elements[p] = std::move(current);
  }
  return result;
}

SubdomainDofs subdomain_dofs(const DofMap& dofmap, const Partition& partition) {
  SubdomainDofs out;
  const int np = partition.np;
  const auto first = dofmap.node_first_element();
  out.node_owner.resize(dofmap.nodes.size());
  for (std::size_t n = 0; n < dofmap.nodes.size(); ++n) out.node_owner[n] = partition.owner[first[n]];

  auto push_dofs = [&](std::vector<int>& list, int node) {
    const int start = dofmap.nodes[node].dof_start;
    for (int z = 0; z < dofmap.dofs_per_node(node); ++z) list.push_back(start + z);
  };

  out.owned.assign(np, {});
  for (std::size_t n = 0; n < dofmap.nodes.size(); ++n) push_dofs(out.owned[out.node_owner[n]], static_cast<int>(n));

  auto collect = [&](const std::vector<int>& elements) {
    std::vector<int> nodes;
    for (int k : elements) {
      for (int n : dofmap.element_nodes(k)) nodes.push_back(n);
    }
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    std::vector<int> dofs;
    for (int n : nodes) push_dofs(dofs, n);
    return dofs;
  };

  const auto owned_elements = partition.owned_elements();
  out.interior.resize(np);
  out.overlap.resize(np);
  for (int p = 0; p < np; ++p) {
    out.interior[p] = collect(owned_elements[p]);
    out.overlap[p] = collect(partition.overlap_elements[p]);
  }
  return out;
}

// ---------------------------------------------------------------------------

VertexGraph vertex_graph(const Mesh& mesh) {
  VertexGraph g;
  g.adjacency.resize(mesh.vertices.size());
  for (const auto& t : mesh.elements) {
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        if (i != j) g.adjacency[t[i]].push_back(t[j]);
      }
    }
  }
  for (auto& nbrs : g.adjacency) {
    std::sort(nbrs.begin(), nbrs.end());
    nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
  }
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    if (mesh.boundary_marker[v] == 0) g.interior_vertices.push_back(v);
  }
  return g;
}

} // namespace schwarz
