#include "doctest.h"

#include "schwarz/error.hpp"
#include "schwarz/fixtures.hpp"
#include "schwarz/mesh.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

using namespace schwarz;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("schwarz_test_mesh_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream(path) << text;
}

const char* kSquareNode =
    "# unit square\n"
    "4 2 0 1\n"
    "0 0.0 0.0 1\n"
    "1 1.0 0.0 1\n"
    "2 1.0 1.0 1\n"
    "3 0.0 1.0 1\n";

Mesh grid_2x2() {
  GridMeshSpec spec;
  spec.nx = 2;
  spec.ny = 2;
  return grid_mesh(spec);
}

} // namespace

TEST_CASE("load unit square") {
  const auto dir = scratch_dir("square");
  write_file(dir / "sq.node", kSquareNode);
  write_file(dir / "sq.ele", "2 3 0\n0 0 1 2\n1 0 2 3\n");
  const Mesh m = load_mesh(dir / "sq");
  CHECK(m.num_vertices() == 4);
  CHECK(m.num_elements() == 2);
  CHECK(m.total_area() == doctest::Approx(1.0));
}

TEST_CASE("out-of-range reference names the element") {
  const auto dir = scratch_dir("range");
  write_file(dir / "sq.node", kSquareNode);
  write_file(dir / "sq.ele", "2 3 0\n0 0 1 2\n1 0 2 99\n");
  try {
    load_mesh(dir / "sq");
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("element 1") != std::string::npos);
  }
}

TEST_CASE("clockwise triangle is reoriented") {
  const auto dir = scratch_dir("cw");
  write_file(dir / "t.node", "3 2 0 1\n0 0 0 1\n1 1 0 1\n2 0 1 1\n");
  write_file(dir / "t.ele", "1 3 0\n0 0 2 1\n");
  const Mesh m = load_mesh(dir / "t");
  // Shoelace on the stored order must give +1/2.
  const auto& t = m.elements[0];
  const Point a = m.vertices[t[0]], b = m.vertices[t[1]], c = m.vertices[t[2]];
  const double shoelace = 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
  CHECK(shoelace == doctest::Approx(0.5));
}

TEST_CASE("parse errors carry the line") {
  const auto dir = scratch_dir("parse");
  write_file(dir / "sq.node", "4 2 0 1\n0 0.0 0.0 1\n1 abc 0.0 1\n2 1 1 1\n3 0 1 1\n");
  write_file(dir / "sq.ele", "2 3 0\n0 0 1 2\n1 0 2 3\n");
  try {
    load_mesh(dir / "sq");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find(":3:") != std::string::npos);
  }
  write_file(dir / "short.node", "4 2 0 1\n0 0 0 1\n1 1 0 1\n");
  write_file(dir / "short.ele", "2 3 0\n0 0 1 2\n1 0 2 3\n");
  CHECK_THROWS_AS(load_mesh(dir / "short"), ParseError);
}

TEST_CASE("nonconforming and dangling meshes are rejected") {
  Mesh m = unit_square_mesh();
  m.vertices.push_back({3, 3});
  m.boundary_marker.push_back(1);
  CHECK_THROWS_AS(validate_mesh(m), ValidationError);

  Mesh open = square_with_center_mesh();
  open.elements.pop_back();
  CHECK_THROWS_AS(validate_mesh(open), ValidationError);  // interior vertex on a boundary edge

  Mesh flat = unit_square_mesh();
  flat.vertices[2] = {2, 0};
  flat.vertices[3] = {3, 0};
  CHECK_THROWS_AS(validate_mesh(flat), ValidationError);
}

TEST_CASE("save/load round trip is bit exact") {
  const auto dir = scratch_dir("roundtrip");
  const Mesh m = random_rectangle_mesh(7);
  save_mesh(m, dir / "r");
  const Mesh back = load_mesh(dir / "r");
  REQUIRE(back.num_vertices() == m.num_vertices());
  for (int v = 0; v < m.num_vertices(); ++v) {
    CHECK(back.vertices[v].x == m.vertices[v].x);
    CHECK(back.vertices[v].y == m.vertices[v].y);
    CHECK(back.boundary_marker[v] == m.boundary_marker[v]);
  }
  auto as_set = [](const Mesh& mesh) {
    std::set<std::array<int, 3>> s;
    for (auto t : mesh.elements) {
      std::sort(t.begin(), t.end());
      s.insert(t);
    }
    return s;
  };
  CHECK(as_set(back) == as_set(m));
}

TEST_CASE("dof counts") {
  const Mesh sq = unit_square_mesh();
  // Unique edges by brute enumeration of element sides.
  std::set<std::pair<int, int>> edges;
  for (const auto& t : sq.elements) {
    for (int i = 0; i < 3; ++i) edges.insert(std::minmax(t[i], t[(i + 1) % 3]));
  }
  REQUIRE(edges.size() == 5);
  CHECK(build_dof_map(sq, {{1, 0, 0}}).total_dofs == 4);
  CHECK(build_dof_map(sq, {{1, 1, 0}}).total_dofs == 4 + 5);
  CHECK(build_dof_map(sq, {{3, 2, 0}}).total_dofs == 4 * 3 + 5 * 2);
  CHECK_THROWS_AS(build_dof_map(sq, {{0, 0, 0}}), ValidationError);
}

TEST_CASE("dof map closed form and ordering on random meshes") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Mesh m = random_rectangle_mesh(seed);
    const auto ne_edges = static_cast<int>(unique_edges(m).size());
    for (DofLayout layout : {DofLayout{{1, 0, 0}}, DofLayout{{0, 0, 1}}, DofLayout{{3, 2, 0}}, DofLayout{{2, 1, 3}}}) {
      const DofMap map = build_dof_map(m, layout);
      CHECK(map.total_dofs == layout.z[0] * m.num_vertices() + layout.z[1] * ne_edges + layout.z[2] * m.num_elements());
      int expect = 0;
      int last_dim = 0;
      for (std::size_t n = 0; n < map.nodes.size(); ++n) {
        CHECK(map.nodes[n].dof_start == expect);
        CHECK(map.nodes[n].dim >= last_dim);
        last_dim = map.nodes[n].dim;
        expect += map.dofs_per_node(static_cast<int>(n));
      }
      CHECK(expect == map.total_dofs);
    }
  }
}

TEST_CASE("partition examples") {
  const Mesh g = grid_2x2();
  REQUIRE(g.num_elements() == 8);

  const Partition one = partition_mesh(g, 1, 0);
  CHECK(std::all_of(one.owner.begin(), one.owner.end(), [](int p) { return p == 0; }));

  const Partition two = partition_mesh(g, 2, 0);
  const auto owned = two.owned_elements();
  CHECK(owned[0].size() == 4);
  CHECK(owned[1].size() == 4);
  for (int k : owned[0]) CHECK(g.centroid(k).x < 1.0 / 2.0 + 1e-12);
  for (int k : owned[1]) CHECK(g.centroid(k).x > 1.0 / 2.0 - 1e-12);

  const Partition all = partition_mesh(g, 8, 0);
  std::set<int> owners(all.owner.begin(), all.owner.end());
  CHECK(owners.size() == 8);

  CHECK_THROWS_AS(partition_mesh(g, 9, 0), ValidationError);
}

TEST_CASE("overlap examples") {
  const Mesh g = grid_2x2();
  const Partition two = partition_mesh(g, 2, 0);
  const Partition zero = extend_overlap(g, two, 0);
  CHECK(zero.overlap_elements == two.owned_elements());

  const Partition one = extend_overlap(g, two, 1);
  const auto owned = two.owned_elements();
  // Brute-force closure: elements sharing a vertex with an owned element.
  for (int p = 0; p < 2; ++p) {
    std::set<int> expect;
    for (int k = 0; k < g.num_elements(); ++k) {
      for (int o : owned[p]) {
        for (int a : g.elements[k])
          for (int b : g.elements[o])
            if (a == b) expect.insert(k);
      }
    }
    CHECK(std::vector<int>(expect.begin(), expect.end()) == one.overlap_elements[p]);
    CHECK(one.overlap_elements[p].size() == 8);
  }

  const Mesh big = random_rectangle_mesh(3);
  const Partition p4 = partition_mesh(big, 4, 1);
  const Partition sat = extend_overlap(big, p4, 1000);
  for (const auto& s : sat.overlap_elements) CHECK(static_cast<int>(s.size()) == big.num_elements());
}

TEST_CASE("partition invariants on random meshes") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const Mesh m = random_rectangle_mesh(seed);
    for (int np : {1, 2, 3, 4, 7}) {
      const Partition part = partition_mesh(m, np, seed);
      std::vector<int> count(np, 0);
      for (int p : part.owner) {
        REQUIRE(p >= 0);
        REQUIRE(p < np);
        ++count[p];
      }
      const double ideal = static_cast<double>(m.num_elements()) / np;
      for (int c : count) CHECK(std::abs(c - ideal) <= std::max(1.0, 0.1 * ideal));
      CHECK(partition_mesh(m, np, seed).owner == part.owner);

      Partition prev = extend_overlap(m, part, 0);
      for (int delta = 1; delta <= 3; ++delta) {
        const Partition next = extend_overlap(m, part, delta);
        for (int p = 0; p < np; ++p) {
          CHECK(std::includes(next.overlap_elements[p].begin(), next.overlap_elements[p].end(),
                              prev.overlap_elements[p].begin(), prev.overlap_elements[p].end()));
        }
        prev = next;
      }
    }
  }
}

TEST_CASE("subdomain dofs") {
  const Mesh m = random_rectangle_mesh(11);
  const DofMap map = build_dof_map(m, {{3, 2, 0}});
  const Partition part = extend_overlap(m, partition_mesh(m, 4, 0), 1);
  const SubdomainDofs sd = subdomain_dofs(map, part);
  std::vector<int> hits(map.total_dofs, 0);
  for (int p = 0; p < 4; ++p) {
    for (int d : sd.owned[p]) ++hits[d];
    CHECK(std::includes(sd.interior[p].begin(), sd.interior[p].end(), sd.owned[p].begin(), sd.owned[p].end()));
    CHECK(std::includes(sd.overlap[p].begin(), sd.overlap[p].end(), sd.interior[p].begin(), sd.interior[p].end()));
  }
  CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
}

TEST_CASE("vertex graph examples") {
  GridMeshSpec single;
  single.nx = 1;
  single.ny = 1;
  Mesh tri;
  tri.vertices = {{0, 0}, {1, 0}, {0, 1}};
  tri.elements = {{0, 1, 2}};
  tri.boundary_marker = {1, 1, 1};
  CHECK(vertex_graph(tri).interior_vertices.empty());

  const VertexGraph star = vertex_graph(square_with_center_mesh());
  CHECK(star.interior_vertices == std::vector<int>{4});
  CHECK(star.adjacency[4].size() == 4);

  const VertexGraph sq = vertex_graph(unit_square_mesh());
  CHECK(sq.adjacency[0] == std::vector<int>{1, 2, 3});
  CHECK(sq.adjacency[2] == std::vector<int>{0, 1, 3});
}

TEST_CASE("vertex graph matches brute force") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Mesh m = random_rectangle_mesh(seed, 3, 9);
    REQUIRE(m.num_elements() <= 200);
    const VertexGraph g = vertex_graph(m);
    for (int a = 0; a < m.num_vertices(); ++a) {
      for (int b = 0; b < m.num_vertices(); ++b) {
        bool together = false;
        for (const auto& t : m.elements) {
          const bool ha = std::find(t.begin(), t.end(), a) != t.end();
          const bool hb = std::find(t.begin(), t.end(), b) != t.end();
          together = together || (a != b && ha && hb);
        }
        const bool listed = std::binary_search(g.adjacency[a].begin(), g.adjacency[a].end(), b);
        CHECK(listed == together);
      }
    }
    std::vector<int> interior;
    for (int v = 0; v < m.num_vertices(); ++v)
      if (m.boundary_marker[v] == 0) interior.push_back(v);
    CHECK(g.interior_vertices == interior);
  }
}

TEST_CASE("replayed bisection keeps subdomain regions aligned") {
  GridMeshSpec fine_spec;
  fine_spec.x1 = 1.2;
  fine_spec.nx = 24;
  fine_spec.ny = 20;
  fine_spec.jitter = 0.2;
  const Mesh fine = grid_mesh(fine_spec);
  GridMeshSpec coarse_spec = fine_spec;
  coarse_spec.nx = 7;
  coarse_spec.ny = 9;
  const Mesh coarse = grid_mesh(coarse_spec);
  for (int np : {1, 2, 3, 4, 7}) {
    const Partition pf = partition_mesh(fine, np, 3);
    REQUIRE(pf.cut_axes.size() == static_cast<std::size_t>(np - 1));
    const Partition pc = partition_like(coarse, pf, 3);
    CHECK(pc.cut_axes == pf.cut_axes);
    CHECK(pc.np == np);
    // Every subdomain still receives elements, balanced to within one.
    std::vector<int> count(np, 0);
    for (int o : pc.owner) ++count[o];
    CHECK(*std::min_element(count.begin(), count.end()) > 0);
    // Subdomain centroid means sit close on both levels.
    for (int p = 0; p < np; ++p) {
      Point mf{}, mc{};
      int nf = 0, nc = 0;
      for (int k = 0; k < fine.num_elements(); ++k)
        if (pf.owner[k] == p) mf = mf + fine.centroid(k), ++nf;
      for (int k = 0; k < coarse.num_elements(); ++k)
        if (pc.owner[k] == p) mc = mc + coarse.centroid(k), ++nc;
      CHECK(distance((1.0 / nf) * mf, (1.0 / nc) * mc) < 0.15);
    }
  }
  Partition bad = partition_mesh(fine, 4, 0);
  bad.cut_axes.pop_back();
  CHECK_THROWS_AS(partition_like(coarse, bad, 0), ValidationError);
}
