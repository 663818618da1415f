#include "schwarz/coarsen.hpp"

#include "schwarz/error.hpp"
#include "schwarz/parallel.hpp"
#include "schwarz/random.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <unordered_map>

namespace schwarz {

namespace {

enum class MisState : char { undecided, in, out };

}

MisResult maximal_independent_set(const VertexGraph& graph, std::uint64_t seed) {
  const std::size_t nv = graph.adjacency.size();
  std::vector<std::uint64_t> priority(nv, 0);
  std::vector<MisState> state(nv, MisState::out);
  for (int v : graph.interior_vertices) {
    priority[v] = hash_combine(seed, static_cast<std::uint64_t>(v));
    state[v] = MisState::undecided;
  }
  auto beats = [&](int a, int b) {
    return priority[a] != priority[b] ? priority[a] > priority[b] : a > b;
  };

  std::vector<int> active = graph.interior_vertices;
  std::vector<char> winner(nv, 0);
  while (!active.empty()) {
    // Both phases only write per-vertex slots, so the rounds are race free.
    parallel_for(active.size(), [&](std::size_t i) {
      const int v = active[i];
      bool local_max = true;
      for (int u : graph.adjacency[v]) {
        if (state[u] == MisState::undecided && beats(u, v)) {
          local_max = false;
          break;
        }
      }
      winner[v] = local_max;
    });
    for (int v : active) {
      if (winner[v]) state[v] = MisState::in;
    }
    parallel_for(active.size(), [&](std::size_t i) {
      const int v = active[i];
      if (state[v] != MisState::undecided) return;
      for (int u : graph.adjacency[v]) {
        if (winner[u]) {
          state[v] = MisState::out;
          break;
        }
      }
    });
    std::vector<int> next;
    for (int v : active) {
      winner[v] = 0;
      if (state[v] == MisState::undecided) next.push_back(v);
    }
    active = std::move(next);
  }

  MisResult mis;
  for (int v : graph.interior_vertices) {
    if (state[v] == MisState::in) mis.selected.push_back(v);
  }
  std::sort(mis.selected.begin(), mis.selected.end());
  return mis;
}

std::string check_mis(const VertexGraph& graph, const MisResult& mis) {
  const std::size_t nv = graph.adjacency.size();
  std::vector<char> interior(nv, 0), chosen(nv, 0);
  for (int v : graph.interior_vertices) interior[v] = 1;
  for (int v : mis.selected) {
    if (v < 0 || static_cast<std::size_t>(v) >= nv) return "vertex " + std::to_string(v) + " out of range";
    if (!interior[v]) return "vertex " + std::to_string(v) + " is not interior";
    if (chosen[v]) return "vertex " + std::to_string(v) + " selected twice";
    chosen[v] = 1;
  }
  for (int v : mis.selected) {
    for (int u : graph.adjacency[v]) {
      if (chosen[u]) return "adjacent vertices " + std::to_string(v) + " and " + std::to_string(u) + " both selected";
    }
  }
  for (int v : graph.interior_vertices) {
    if (chosen[v]) continue;
    const bool covered = std::any_of(graph.adjacency[v].begin(), graph.adjacency[v].end(),
                                     [&](int u) { return chosen[u] != 0; });
    if (!covered) return "vertex " + std::to_string(v) + " could be added";
  }
  return {};
}

namespace {

/// Counter-clockwise link of `v`, or empty when the star is not a disk.
std::vector<int> star_link(const Mesh& mesh, int v, const std::vector<int>& star) {
  if (star.size() < 3) return {};
  std::unordered_map<int, int> next;
  for (int k : star) {
    const Triangle& t = mesh.elements[k];
    const int i = static_cast<int>(std::find(t.begin(), t.end(), v) - t.begin());
    const int a = t[(i + 1) % 3], b = t[(i + 2) % 3];
    if (!next.emplace(a, b).second) return {};
  }
  std::vector<int> loop;
  loop.reserve(star.size());
  int cur = next.begin()->first;
  // Start from the smallest id so the loop does not depend on hash order.
  for (const auto& [a, b] : next) cur = std::min(cur, a);
  const int start = cur;
  do {
    loop.push_back(cur);
    const auto it = next.find(cur);
    if (it == next.end() || loop.size() > star.size()) return {};
    cur = it->second;
  } while (cur != start);
  if (loop.size() != star.size()) return {};
  return loop;
}

double triangle_min_angle(Point a, Point b, Point c) {
  const double la = distance(b, c), lb = distance(c, a), lc = distance(a, b);
  auto angle = [](double opp, double s1, double s2) {
    const double cosv = std::clamp((s1 * s1 + s2 * s2 - opp * opp) / (2.0 * s1 * s2), -1.0, 1.0);
    return std::acos(cosv);
  };
  return std::min({angle(la, lb, lc), angle(lb, lc, la), angle(lc, la, lb)});
}

} // namespace

CarveResult carve_cavities(const Mesh& mesh, const MisResult& mis) {
  const auto incident = vertex_elements(mesh);
  CarveResult out;
  std::vector<char> deleted(mesh.num_elements(), 0);
  for (int v : mis.selected) {
    const auto& star = incident[v];
    auto loop = star_link(mesh, v, star);
    const bool overlaps = std::any_of(star.begin(), star.end(), [&](int k) { return deleted[k] != 0; });
    if (loop.empty() || overlaps) {
      out.skipped_vertices.push_back(v);
      continue;
    }
    for (int k : star) deleted[k] = 1;
    out.cavities.push_back({v, star, std::move(loop)});
  }
  for (int k = 0; k < mesh.num_elements(); ++k) {
    if (!deleted[k]) out.remaining.push_back(k);
  }
  return out;
}

std::vector<Triangle> retriangulate_cavity(const Cavity& cavity, const Mesh& mesh) {
  const std::vector<int>& loop = cavity.boundary_loop;
  const int n = static_cast<int>(loop.size());
  if (n < 3) throw GeometryError("cavity loop has fewer than three vertices");
  auto pt = [&](int i) { return mesh.vertices[loop[i]]; };

  // Segment (i, j) strictly crosses loop edge (k, k+1).
  auto crosses = [&](int i, int j) {
    const Point a = pt(i), b = pt(j);
    for (int k = 0; k < n; ++k) {
      const int l = (k + 1) % n;
      if (k == i || k == j || l == i || l == j) continue;
      const Point c = pt(k), d = pt(l);
      const double o1 = orient2d(a, b, c), o2 = orient2d(a, b, d);
      const double o3 = orient2d(c, d, a), o4 = orient2d(c, d, b);
      if (((o1 > 0) != (o2 > 0) || o1 == 0 || o2 == 0) && ((o3 > 0) != (o4 > 0) || o3 == 0 || o4 == 0)) return true;
    }
    return false;
  };
  std::vector<char> chord(static_cast<std::size_t>(n) * n, 0);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) chord[i * n + j] = (j == i + 1 || (i == 0 && j == n - 1)) ? 1 : !crosses(i, j);

  auto valid = [&](int i, int k, int j) {
    const Point a = pt(i), b = pt(k), c = pt(j);
    const double scale = std::max({distance(a, b), distance(b, c), distance(c, a)});
    if (orient2d(a, b, c) <= 1e-12 * scale * scale) return false;
    if (!chord[i * n + k] || !chord[k * n + j] || !chord[i * n + j]) return false;
    for (int q = 0; q < n; ++q) {
      if (q == i || q == k || q == j) continue;
      const Point p = pt(q);
      if (orient2d(a, b, p) >= 0.0 && orient2d(b, c, p) >= 0.0 && orient2d(c, a, p) >= 0.0) return false;
    }
    return true;
  };

  // best[i][j]: largest achievable minimum angle over triangulations of the
  // sub-polygon i..j, -1 when none exists.
  constexpr double kNone = -1.0;
  std::vector<double> best(static_cast<std::size_t>(n) * n, kNone);
  std::vector<int> split(static_cast<std::size_t>(n) * n, -1);
  for (int i = 0; i + 1 < n; ++i) best[i * n + i + 1] = INFINITY;
  for (int len = 2; len < n; ++len) {
    for (int i = 0; i + len < n; ++i) {
      const int j = i + len;
      for (int k = i + 1; k < j; ++k) {
        const double left = best[i * n + k], right = best[k * n + j];
        if (left == kNone || right == kNone || !valid(i, k, j)) continue;
        const double q = std::min({left, right, triangle_min_angle(pt(i), pt(k), pt(j))});
        if (q > best[i * n + j]) {
          best[i * n + j] = q;
          split[i * n + j] = k;
        }
      }
    }
  }
  if (best[n - 1] == kNone) {
    throw GeometryError("no valid triangulation of the cavity of vertex " + std::to_string(cavity.removed_vertex));
  }

  std::vector<Triangle> out;
  out.reserve(n - 2);
  std::vector<std::pair<int, int>> stack{{0, n - 1}};
  while (!stack.empty()) {
    const auto [i, j] = stack.back();
    stack.pop_back();
    if (j - i < 2) continue;
    const int k = split[i * n + j];
    out.push_back({loop[i], loop[k], loop[j]});
    stack.push_back({k, j});
    stack.push_back({i, k});
  }
  return out;
}

CoarsenOnceResult coarsen_once(const Mesh& mesh, const Partition& partition, std::uint64_t seed) {
  return coarsen_once(mesh, partition, maximal_independent_set(vertex_graph(mesh), seed));
}

CoarsenOnceResult coarsen_once(const Mesh& mesh, const Partition& partition, const MisResult& mis) {
  if (static_cast<int>(partition.owner.size()) != mesh.num_elements()) {
    throw ValidationError("partition does not match the mesh element count");
  }
  CarveResult carved = carve_cavities(mesh, mis);

  // Group cavities by the subdomain owning their first star element; each
  // worker fills its own cavities and writes only to their result slots.
  const std::size_t nc = carved.cavities.size();
  std::vector<int> cavity_owner(nc);
  std::vector<std::vector<std::size_t>> by_subdomain(partition.np);
  for (std::size_t c = 0; c < nc; ++c) {
    cavity_owner[c] = partition.owner[carved.cavities[c].deleted_elements.front()];
    by_subdomain[cavity_owner[c]].push_back(c);
  }

  double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
  if (!mesh.vertices.empty()) {
    xmin = xmax = mesh.vertices[0].x;
    ymin = ymax = mesh.vertices[0].y;
    for (const Point& p : mesh.vertices) {
      xmin = std::min(xmin, p.x);
      xmax = std::max(xmax, p.x);
      ymin = std::min(ymin, p.y);
      ymax = std::max(ymax, p.y);
    }
  }
  const double min_area = 1e-14 * (xmax - xmin) * (ymax - ymin);

  std::vector<std::vector<Triangle>> fill(nc);
  std::vector<char> ok(nc, 0);
  parallel_for(by_subdomain.size(), [&](std::size_t p) {
    for (std::size_t c : by_subdomain[p]) {
      try {
        auto tris = retriangulate_cavity(carved.cavities[c], mesh);
        const bool fine = std::all_of(tris.begin(), tris.end(), [&](const Triangle& t) {
          return 0.5 * orient2d(mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]) > min_area;
        });
        if (!fine) continue;
        fill[c] = std::move(tris);
        ok[c] = 1;
      } catch (const GeometryError&) {
      }
    }
  });

  CoarsenOnceResult out;
  out.skipped_vertices = carved.skipped_vertices;
  std::vector<char> removed(mesh.num_vertices(), 0);
  std::vector<char> kept_element(mesh.num_elements(), 0);
  for (int k : carved.remaining) kept_element[k] = 1;
  for (std::size_t c = 0; c < nc; ++c) {
    const Cavity& cav = carved.cavities[c];
    if (ok[c]) {
      removed[cav.removed_vertex] = 1;
      ++out.removed;
    } else {
      out.skipped_vertices.push_back(cav.removed_vertex);
      for (int k : cav.deleted_elements) kept_element[k] = 1;
    }
  }
  std::sort(out.skipped_vertices.begin(), out.skipped_vertices.end());

  std::vector<int> index(mesh.num_vertices(), -1);
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    if (removed[v]) continue;
    index[v] = out.mesh.num_vertices();
    out.mesh.vertices.push_back(mesh.vertices[v]);
    out.mesh.boundary_marker.push_back(mesh.boundary_marker[v]);
  }
  auto remap = [&](const Triangle& t) { return Triangle{index[t[0]], index[t[1]], index[t[2]]}; };
  for (int k = 0; k < mesh.num_elements(); ++k) {
    if (!kept_element[k]) continue;
    out.mesh.elements.push_back(remap(mesh.elements[k]));
    out.owner.push_back(partition.owner[k]);
  }
  for (std::size_t c = 0; c < nc; ++c) {
    if (!ok[c]) continue;
    for (const Triangle& t : fill[c]) {
      out.mesh.elements.push_back(remap(t));
      out.owner.push_back(cavity_owner[c]);
    }
  }
  validate_mesh(out.mesh);
  return out;
}

namespace {

/// Fresh bisection of the coarse mesh; replays the input's cut axes when it
/// has them so subdomains keep covering the same region.
Partition repartition(const Mesh& mesh, const Partition& like, std::uint64_t seed) {
  if (like.np <= mesh.num_elements() && like.cut_axes.size() + 1 == static_cast<std::size_t>(like.np)) {
    return partition_like(mesh, like, seed);
  }
  return partition_mesh(mesh, std::min(like.np, mesh.num_elements()), seed);
}

} // namespace

CoarsenResult coarsen(const Mesh& mesh, const Partition& partition, const CoarsenConfig& config) {
  if (config.max_rounds < 1) throw ValidationError("coarsening needs at least one round");
  CoarsenResult result;
  result.mesh = mesh;
  result.rounds.push_back({0, mesh.num_vertices(), mesh.num_elements(), min_angle_deg(mesh), 0});

  Partition current = partition;
  for (int round = 1; round <= config.max_rounds; ++round) {
    const MisResult mis = maximal_independent_set(vertex_graph(result.mesh),
                                                  hash_combine(config.seed, static_cast<std::uint64_t>(round)));
    if (mis.selected.empty()) break;
    CoarsenOnceResult step = coarsen_once(result.mesh, current, mis);
    if (step.removed == 0) break;
    result.mesh = std::move(step.mesh);
    current.owner = std::move(step.owner);
    current.overlap_elements = current.owned_elements();
    // Keep every subdomain non-empty so the inherited partition stays usable.
    for (const auto& owned : current.overlap_elements) {
      if (owned.empty()) {
        current = repartition(result.mesh, partition, config.seed);
        break;
      }
    }
    result.rounds.push_back(
        {round, result.mesh.num_vertices(), result.mesh.num_elements(), min_angle_deg(result.mesh), step.removed});
  }

  if (config.rebalance) current = repartition(result.mesh, partition, config.seed);
  result.partition = extend_overlap(result.mesh, current, partition.delta);
  return result;
}

std::string format_round_stats(const std::vector<RoundStats>& rounds) {
  std::ostringstream os;
  os << "# round NV NE min_angle_deg\n";
  for (const auto& r : rounds) {
    os << r.round << ' ' << r.num_vertices << ' ' << r.num_elements << ' ' << r.min_angle_deg << '\n';
  }
  return os.str();
}

} // namespace schwarz
