#include "schwarz/disc.hpp"

#include "schwarz/error.hpp"
#include "schwarz/parallel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>

namespace schwarz {

namespace {

/// Concatenates per-item triplet buffers in item order, so the merged CSR
/// does not depend on how items were spread over workers.
std::vector<Triplet> concat(std::vector<std::vector<Triplet>>& parts) {
  std::size_t total = 0;
  for (const auto& p : parts) total += p.size();
  std::vector<Triplet> all;
  all.reserve(total);
  for (auto& p : parts) all.insert(all.end(), p.begin(), p.end());
  return all;
}

/// Element ids on either side of every edge (-1 on the boundary).
std::vector<std::array<int, 2>> edge_elements(const DofMap& dofs) {
  std::vector<std::array<int, 2>> sides(dofs.edges.size(), {-1, -1});
  for (int k = 0; k < dofs.num_elements; ++k) {
    for (int e : dofs.element_edges[k]) {
      auto& s = sides[e];
      (s[0] < 0 ? s[0] : s[1]) = k;
    }
  }
  return sides;
}

} // namespace

LinearSystem assemble_convdiff(const Mesh& mesh, const ConvDiffParams& params) {
  if (!std::isfinite(params.beta) || !std::isfinite(params.v0.x) || !std::isfinite(params.v0.y) ||
      !std::isfinite(params.f)) {
    throw ValidationError("convection-diffusion parameters must be finite");
  }
  validate_mesh(mesh);
  LinearSystem sys;
  sys.dofmap = build_dof_map(mesh, {{0, 0, 1}});
  const DofMap& dofs = sys.dofmap;
  const auto sides = edge_elements(dofs);
  const int n = mesh.num_elements();

  std::vector<std::vector<Triplet>> rows(n);
  sys.b.assign(n, 0.0);
  parallel_for(
      n,
      [&](std::size_t kk) {
        const int k = static_cast<int>(kk);
        const auto& t = mesh.elements[k];
        const Point ck = mesh.centroid(k);
        double diag = 0.0;
        auto& out = rows[k];
        for (int i = 0; i < 3; ++i) {
          const Point a = mesh.vertices[t[(i + 1) % 3]], b = mesh.vertices[t[(i + 2) % 3]];
          const double len = distance(a, b);
          // Outward normal times length for a counter-clockwise element.
          const double flux = params.beta * (params.v0.x * (b.y - a.y) - params.v0.y * (b.x - a.x));
          const double out_flow = std::max(flux, 0.0), in_flow = std::max(-flux, 0.0);
          const auto& s = sides[dofs.element_edges[k][i]];
          const int other = s[0] == k ? s[1] : s[0];
          if (other < 0) {
            diag += len / distance(ck, 0.5 * (a + b)) + out_flow;
          } else {
            const double trans = len / distance(ck, mesh.centroid(other));
            diag += trans + out_flow;
            out.push_back({k, other, -trans - in_flow});
          }
        }
        out.push_back({k, k, diag});
        sys.b[k] = params.f * mesh.signed_area(k);
      },
      256);
  sys.J = CsrMatrix::from_triplets(n, n, concat(rows));
  return sys;
}

void validate_stokes_params(const StokesParams& params) {
  if (!(params.nu > 0.0) || !std::isfinite(params.nu)) throw ValidationError("viscosity must be positive");
  if (!params.inlet) throw ValidationError("inlet profile is missing");
}

std::vector<int> stokes_node_tags(const Mesh& mesh, const DofMap& dofs) {
  std::vector<int> tags(dofs.nodes.size(), 0);
  for (std::size_t node = 0; node < dofs.nodes.size(); ++node) {
    if (dofs.nodes[node].dim == 0) tags[node] = mesh.boundary_marker[dofs.nodes[node].entity];
  }
  if (dofs.layout.z[1] == 0) return tags;
  const auto sides = edge_elements(dofs);
  for (int e = 0; e < static_cast<int>(dofs.edges.size()); ++e) {
    if (sides[e][1] >= 0) continue;
    const int ma = mesh.boundary_marker[dofs.edges[e].first], mb = mesh.boundary_marker[dofs.edges[e].second];
    int tag = kWallTag;
    if (ma == kOutletTag || mb == kOutletTag) {
      tag = kOutletTag;
    } else if (ma == kInletTag || mb == kInletTag) {
      tag = kInletTag;
    }
    tags[dofs.edge_node(e)] = tag;
  }
  return tags;
}

namespace {

// Symmetric 6-point rule, exact for degree 4 (weights sum to 1).
constexpr double kQa = 0.445948490915965, kQwa = 0.223381589678011;
constexpr double kQb = 0.091576213509771, kQwb = 0.109951743655322;

struct QuadPoint {
  std::array<double, 3> lambda;
  double weight;
};

constexpr std::array<QuadPoint, 6> kRule{{
    {{kQa, kQa, 1 - 2 * kQa}, kQwa},
    {{kQa, 1 - 2 * kQa, kQa}, kQwa},
    {{1 - 2 * kQa, kQa, kQa}, kQwa},
    {{kQb, kQb, 1 - 2 * kQb}, kQwb},
    {{kQb, 1 - 2 * kQb, kQb}, kQwb},
    {{1 - 2 * kQb, kQb, kQb}, kQwb},
}};

struct ElementGeometry {
  double area;
  std::array<Point, 3> grad_lambda;
};

ElementGeometry geometry(const Mesh& mesh, int k) {
  const auto& t = mesh.elements[k];
  const Point p[3] = {mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]};
  const double twice = orient2d(p[0], p[1], p[2]);
  ElementGeometry g{0.5 * twice, {}};
  for (int i = 0; i < 3; ++i) {
    const Point pj = p[(i + 1) % 3], pk = p[(i + 2) % 3];
    g.grad_lambda[i] = {(pj.y - pk.y) / twice, (pk.x - pj.x) / twice};
  }
  return g;
}

/// Gradients of the six P2 shape functions (vertices, then edge k opposite
/// vertex k) at barycentric point l.
std::array<Point, 6> p2_gradients(const ElementGeometry& g, const std::array<double, 3>& l) {
  std::array<Point, 6> out;
  for (int i = 0; i < 3; ++i) out[i] = (4.0 * l[i] - 1.0) * g.grad_lambda[i];
  for (int k = 0; k < 3; ++k) {
    const int a = (k + 1) % 3, b = (k + 2) % 3;
    out[3 + k] = 4.0 * (l[a] * g.grad_lambda[b] + l[b] * g.grad_lambda[a]);
  }
  return out;
}

} // namespace

LinearSystem assemble_stokes(const Mesh& mesh, const StokesParams& params) {
  validate_stokes_params(params);
  validate_mesh(mesh);
  std::set<int> present(mesh.boundary_marker.begin(), mesh.boundary_marker.end());
  std::string missing;
  for (int tag : {kWallTag, kInletTag, kOutletTag}) {
    if (!present.count(tag)) missing += (missing.empty() ? "" : ", ") + std::to_string(tag);
  }
  if (!missing.empty()) throw ValidationError("Stokes mesh lacks boundary tags: " + missing);

  LinearSystem sys;
  sys.dofmap = build_dof_map(mesh, {{3, 2, 0}});
  const DofMap& dofs = sys.dofmap;
  const int n = dofs.total_dofs;
  const double nu = params.nu;

  std::vector<std::vector<Triplet>> parts(mesh.num_elements());
  parallel_for(
      mesh.num_elements(),
      [&](std::size_t kk) {
        const int k = static_cast<int>(kk);
        const auto nodes = dofs.element_nodes(k);
        const auto g = geometry(mesh, k);
        double visc[6][6][2][2] = {};
        double div[3][6][2] = {};
        for (const auto& q : kRule) {
          const auto grad = p2_gradients(g, q.lambda);
          const double w = q.weight * g.area;
          for (int a = 0; a < 6; ++a) {
            const double ga[2] = {grad[a].x, grad[a].y};
            for (int b = 0; b < 6; ++b) {
              const double gb[2] = {grad[b].x, grad[b].y};
              const double lap = ga[0] * gb[0] + ga[1] * gb[1];
              // Row (b, d), column (a, c).
              for (int c = 0; c < 2; ++c)
                for (int d = 0; d < 2; ++d) visc[b][a][d][c] += w * nu * ((c == d ? lap : 0.0) + ga[d] * gb[c]);
            }
            for (int m = 0; m < 3; ++m)
              for (int c = 0; c < 2; ++c) div[m][a][c] -= w * q.lambda[m] * ga[c];
          }
        }
        auto& out = parts[k];
        out.reserve(6 * 6 * 4 + 3 * 6 * 4 + 9);
        auto dof = [&](int local, int comp) { return dofs.nodes[nodes[local]].dof_start + comp; };
        for (int b = 0; b < 6; ++b)
          for (int d = 0; d < 2; ++d)
            for (int a = 0; a < 6; ++a)
              for (int c = 0; c < 2; ++c) out.push_back({dof(b, d), dof(a, c), visc[b][a][d][c]});
        for (int m = 0; m < 3; ++m) {
          const int p = dof(m, 2);
          for (int a = 0; a < 6; ++a)
            for (int c = 0; c < 2; ++c) {
              out.push_back({p, dof(a, c), div[m][a][c]});
              out.push_back({dof(a, c), p, div[m][a][c]});
            }
          // The element's zero pressure block is stored so ILU(0) keeps
          // Schur-complement fill between pressures of one element.
          for (int l = 0; l < 3; ++l) out.push_back({p, dof(l, 2), 0.0});
        }
      },
      64);

  std::vector<Triplet> triplets = concat(parts);
  sys.b.assign(n, 0.0);
  const auto tags = stokes_node_tags(mesh, dofs);

  if (params.outlet_traction) {
    // Three-point Gauss on each outlet edge; exact for the linear tractions
    // used in tests against quadratic traces.
    const double s = std::sqrt(0.15);
    const double gt[3] = {0.5 - s, 0.5, 0.5 + s}, gw[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
    for (int e = 0; e < static_cast<int>(dofs.edges.size()); ++e) {
      const int mid = dofs.edge_node(e);
      if (tags[mid] != kOutletTag) continue;
      const auto [va, vb] = dofs.edges[e];
      const Point pa = mesh.vertices[va], pb = mesh.vertices[vb];
      const double len = distance(pa, pb);
      const int node[3] = {dofs.vertex_node(va), dofs.vertex_node(vb), mid};
      for (int i = 0; i < 3; ++i) {
        const double t = gt[i], la = 1.0 - t;
        const double phi[3] = {la * (2 * la - 1), t * (2 * t - 1), 4 * la * t};
        const Point g = params.outlet_traction(la * pa + t * pb);
        for (int j = 0; j < 3; ++j) {
          sys.b[dofs.nodes[node[j]].dof_start] += gw[i] * len * phi[j] * g.x;
          sys.b[dofs.nodes[node[j]].dof_start + 1] += gw[i] * len * phi[j] * g.y;
        }
      }
    }
  }

  std::vector<char> dirichlet(n, 0);
  for (std::size_t node = 0; node < dofs.nodes.size(); ++node) {
    const int tag = tags[node];
    if (tag != kWallTag && tag != kInletTag) continue;
    const int start = dofs.nodes[node].dof_start;
    const Point value = tag == kInletTag ? params.inlet(dofs.nodes[node].coords) : Point{0.0, 0.0};
    dirichlet[start] = dirichlet[start + 1] = 1;
    sys.b[start] = value.x;
    sys.b[start + 1] = value.y;
  }
  std::erase_if(triplets, [&](const Triplet& t) { return dirichlet[t.row] != 0; });
  for (int i = 0; i < n; ++i)
    if (dirichlet[i]) triplets.push_back({i, i, 1.0});
  sys.J = CsrMatrix::from_triplets(n, n, std::move(triplets));
  return sys;
}

Discretization convdiff_problem(const ConvDiffParams& params) {
  Discretization d;
  d.name = "convdiff";
  d.layout = {{0, 0, 1}};
  d.split = default_split(d.layout);
  d.assemble = [params](const Mesh& m) { return assemble_convdiff(m, params); };
  return d;
}

Discretization stokes_problem(const StokesParams& params) {
  validate_stokes_params(params);
  Discretization d;
  d.name = "stokes";
  d.layout = {{3, 2, 0}};
  d.split = default_split(d.layout);
  d.assemble = [params](const Mesh& m) { return assemble_stokes(m, params); };
  return d;
}

} // namespace schwarz
