#include "schwarz/verify.hpp"

#include "schwarz/coarsen.hpp"
#include "schwarz/disc.hpp"
#include "schwarz/error.hpp"
#include "schwarz/fixtures.hpp"
#include "schwarz/random.hpp"
#include "schwarz/schwarz.hpp"
#include "schwarz/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace schwarz {

namespace {

void record(SuiteResult& r, const std::string& label, const std::string& problem) {
  if (problem.empty()) {
    ++r.passed;
  } else {
    ++r.failed;
    r.failures.push_back(label + ": " + problem);
  }
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

} // namespace

SuiteResult verify_mis(int cases, std::uint64_t seed) {
  SuiteResult r;
  r.name = "mis";
  for (int c = 0; c < cases; ++c) {
    SplitMix rng(hash_combine(seed, static_cast<std::uint64_t>(c)));
    const int n = 1 + static_cast<int>(rng.below(500));
    const double density = rng.uniform(0.0, 8.0) / n;
    std::vector<std::vector<char>> adj(n, std::vector<char>(n, 0));
    VertexGraph g;
    g.adjacency.resize(n);
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b)
        if (rng.uniform() < density) adj[a][b] = adj[b][a] = 1;
    std::vector<char> interior(n, 0);
    for (int v = 0; v < n; ++v) {
      interior[v] = rng.uniform() < 0.8;
      if (interior[v]) g.interior_vertices.push_back(v);
    }
    // The coarsening graph only links interior vertices.
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        if (adj[a][b] && interior[a] && interior[b]) g.adjacency[a].push_back(b);
    const MisResult mis = maximal_independent_set(g, rng.next());
    std::vector<char> in(n, 0);
    std::string problem;
    for (int v : mis.selected) {
      if (v < 0 || v >= n || !interior[v] || in[v]) {
        problem = "invalid member " + std::to_string(v);
        break;
      }
      in[v] = 1;
    }
    for (int a = 0; a < n && problem.empty(); ++a)
      for (int b = a + 1; b < n && problem.empty(); ++b)
        if (in[a] && in[b] && adj[a][b]) problem = "adjacent members " + std::to_string(a) + ", " + std::to_string(b);
    for (int v = 0; v < n && problem.empty(); ++v) {
      if (!interior[v] || in[v]) continue;
      bool blocked = false;
      for (int u = 0; u < n && !blocked; ++u) blocked = in[u] && adj[v][u] && interior[u];
      if (!blocked) problem = "vertex " + std::to_string(v) + " could join";
    }
    record(r, "graph " + std::to_string(c) + " (" + std::to_string(n) + " vertices)", problem);
  }
  return r;
}

namespace {

std::string check_transfer(const TransferOperator& op, const DofMap& src, const DofMap& tgt, const FieldSplit& split,
                           std::uint64_t seed, double tol) {
  for (int i = 0; i < op.matrix.nrows; ++i) {
    double s = 0.0;
    for (int p = op.matrix.row_ptr[i]; p < op.matrix.row_ptr[i + 1]; ++p) s += op.matrix.values[p];
    if (std::abs(s - 1.0) > tol) return "row " + std::to_string(i) + " sums to 1 + " + num(s - 1.0);
  }
  SplitMix rng(seed);
  for (int trial = 0; trial < 3; ++trial) {
    const int nf = split.num_fields();
    std::vector<std::array<double, 3>> coef(nf);
    for (auto& c : coef) c = {rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
    auto fill = [&](const DofMap& dofs) {
      Vector v(dofs.total_dofs, 0.0);
      for (int f = 0; f < nf; ++f) {
        const auto fn = field_nodes(dofs, split, f);
        for (std::size_t k = 0; k < fn.node.size(); ++k) {
          const Point x = dofs.nodes[fn.node[k]].coords;
          v[fn.dof[k]] = coef[f][0] + coef[f][1] * x.x + coef[f][2] * x.y;
        }
      }
      return v;
    };
    const Vector in = fill(src), want = fill(tgt);
    const Vector got = op.apply(in);
    double scale = 0.0, err = 0.0;
    for (double v : want) scale = std::max(scale, std::abs(v));
    for (std::size_t k = 0; k < got.size(); ++k) err = std::max(err, std::abs(got[k] - want[k]));
    if (err > tol * std::max(scale, 1.0)) return "affine field error " + num(err) + " (scale " + num(scale) + ")";
  }
  return {};
}

std::string check_pair(const Mesh& fine, int np, const DofLayout& layout, std::uint64_t seed, double tol) {
  const Partition pf = extend_overlap(fine, partition_mesh(fine, np, seed), 1);
  CoarsenConfig cc;
  cc.seed = seed;
  const CoarsenResult cr = coarsen(fine, pf, cc);
  if (cr.partition.np != np) return {};
  const FieldSplit split = default_split(layout);
  const DofMap df = build_dof_map(fine, layout), dc = build_dof_map(cr.mesh, layout);
  const MlsConfig mls;
  const auto down = build_transfer(fine, df, pf, cr.mesh, dc, cr.partition, split, mls);
  std::string p = check_transfer(down, df, dc, split, hash_combine(seed, 1), tol);
  if (!p.empty()) return "restriction: " + p;
  const auto up = build_transfer(cr.mesh, dc, cr.partition, fine, df, pf, split, mls);
  p = check_transfer(up, dc, df, split, hash_combine(seed, 2), tol);
  if (!p.empty()) return "prolongation: " + p;
  return {};
}

} // namespace

SuiteResult verify_mls(int cases, std::uint64_t seed, double tol, const Mesh* extra) {
  SuiteResult r;
  r.name = "mls";
  for (int c = 0; c < cases; ++c) {
    const std::uint64_t s = hash_combine(seed, static_cast<std::uint64_t>(c));
    SplitMix rng(s);
    const Mesh fine = random_rectangle_mesh(rng.next(), 6, 16);
    const int np = 1 + static_cast<int>(rng.below(4));
    const DofLayout layout = c % 3 == 2 ? DofLayout{{3, 2, 0}} : (c % 3 == 1 ? DofLayout{{0, 0, 1}} : DofLayout{{1, 0, 0}});
    std::string problem;
    try {
      problem = check_pair(fine, np, layout, s, tol);
    } catch (const Error& e) {
      problem = e.what();
    }
    record(r, "pair " + std::to_string(c), problem);
  }
  if (extra) {
    std::string problem;
    try {
      problem = check_pair(*extra, std::min(4, extra->num_elements()), {{1, 0, 0}}, seed, tol);
    } catch (const Error& e) {
      problem = e.what();
    }
    record(r, "supplied mesh", problem);
  }
  return r;
}

namespace {

/// Sylvester's criterion on a symmetric 3x3 matrix (row-major).
bool is_spd3(const std::vector<double>& m) {
  const double d1 = m[0];
  const double d2 = m[0] * m[4] - m[1] * m[3];
  const double d3 = m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
                    m[2] * (m[3] * m[7] - m[4] * m[6]);
  return d1 > 0 && d2 > 0 && d3 > 0;
}

} // namespace

SuiteResult verify_fits(int cases, std::uint64_t seed) {
  SuiteResult r;
  r.name = "fits";
  const MlsConfig cfg;
  for (int c = 0; c < cases; ++c) {
    SplitMix rng(hash_combine(seed, static_cast<std::uint64_t>(c)));
    const bool collinear = c % 5 == 4;
    std::vector<Point> pts;
    const Point x{rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)};
    if (collinear) {
      // A line of points through the site and one point off the line.
      const double ang = rng.uniform(0, 3.14159);
      const Point dir{std::cos(ang), std::sin(ang)};
      for (int k = -3; k <= 3; ++k) pts.push_back(x + (0.1 * k) * dir);
      pts.push_back(x + rng.uniform(0.6, 1.2) * Point{-dir.y, dir.x});
    } else {
      const int n = 3 + static_cast<int>(rng.below(15));
      for (int k = 0; k < n; ++k) pts.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1)});
    }
    std::string problem;
    try {
      const PointCloud cloud(pts, 0.25);
      const double rho0 = collinear ? 0.35 : 0.8;
      const Neighborhood nb = select_neighborhood(x, cloud, {}, rho0, cfg, 10.0);
      std::vector<Point> np;
      for (int id : nb.ids) np.push_back(pts[id]);
      if (collinear && std::find(nb.ids.begin(), nb.ids.end(), static_cast<int>(pts.size()) - 1) == nb.ids.end()) {
        problem = "collinear stencil accepted without growth";
      }
      const MlsFit fit = mls_fit(x, np, nb.ids, nb.radius, cfg);
      if (problem.empty()) {
        const auto& m = fit.p1;
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j)
            if (std::abs(m[3 * i + j] - m[3 * j + i]) > 1e-14 * std::abs(m[0])) problem = "moment matrix not symmetric";
        if (problem.empty() && !is_spd3(m)) problem = "moment matrix not positive definite";
      }
      std::vector<double> samples(np.size());
      for (auto& s : samples) s = rng.uniform(-2, 2);
      for (int k = 0; k < 4 && problem.empty(); ++k) {
        double a1[3], a2[3];
        for (int i = 0; i < 3; ++i) a1[i] = rng.uniform(-3, 3), a2[i] = rng.uniform(-3, 3);
        const double l1 = mls_loss(x, np, samples, nb.radius, a1), l2 = mls_loss(x, np, samples, nb.radius, a2);
        const double t = rng.uniform();
        double at[3];
        for (int i = 0; i < 3; ++i) at[i] = t * a1[i] + (1 - t) * a2[i];
        const double lt = mls_loss(x, np, samples, nb.radius, at);
        if (lt > t * l1 + (1 - t) * l2 + 1e-12 * (l1 + l2)) problem = "convexity violated";
      }
    } catch (const GeometryError& e) {
      // Points all outside any admissible radius; acceptable only when no
      // three of them span a triangle.
      if (!collinear) {
        bool spans = false;
        for (std::size_t a = 0; a < pts.size() && !spans; ++a)
          for (std::size_t b = a + 1; b < pts.size() && !spans; ++b)
            for (std::size_t d = b + 1; d < pts.size() && !spans; ++d) spans = std::abs(orient2d(pts[a], pts[b], pts[d])) > 1e-6;
        if (spans) problem = std::string("fit refused: ") + e.what();
      } else {
        problem = std::string("fit refused: ") + e.what();
      }
    }
    record(r, "site " + std::to_string(c), problem);
  }
  return r;
}

namespace {

std::vector<int> gather(const DofMap& dofs, const std::vector<int>& elements) {
  std::set<int> out;
  for (int k : elements)
    for (int n : dofs.element_nodes(k))
      for (int c = 0; c < dofs.dofs_per_node(n); ++c) out.insert(dofs.nodes[n].dof_start + c);
  return {out.begin(), out.end()};
}

/// Largest entry of |apply_ras - dense formula| and of the dense formula.
std::pair<double, double> ras_discrepancy(const LinearSystem& sys, const Partition& part) {
  const DofMap& dofs = sys.dofmap;
  const int n = sys.J.nrows;
  const auto dense = sys.J.to_dense();
  std::vector<int> owner(n, -1);
  for (int k = dofs.num_elements - 1; k >= 0; --k)
    for (int node : dofs.element_nodes(k))
      for (int c = 0; c < dofs.dofs_per_node(node); ++c) owner[dofs.nodes[node].dof_start + c] = part.owner[k];
  std::vector<double> oracle(static_cast<std::size_t>(n) * n, 0.0);
  for (int p = 0; p < part.np; ++p) {
    const auto idx = gather(dofs, part.overlap_elements[p]);
    const int m = static_cast<int>(idx.size());
    DenseMatrix local(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) local(i, j) = dense[static_cast<std::size_t>(idx[i]) * n + idx[j]];
    const DenseLU lu = lu_factor(local);
    for (int j = 0; j < m; ++j) {
      Vector e(m, 0.0);
      e[j] = 1.0;
      const Vector col = lu_solve(lu, e);
      for (int i = 0; i < m; ++i)
        if (owner[idx[i]] == p) oracle[static_cast<std::size_t>(idx[i]) * n + idx[j]] += col[i];
    }
  }
  const RasPreconditioner ras = build_ras(sys.J, dofs, part, LocalSolver::lu);
  double err = 0.0, scale = 0.0;
  for (int j = 0; j < n; ++j) {
    Vector e(n, 0.0);
    e[j] = 1.0;
    const Vector z = apply_ras(ras, e);
    for (int i = 0; i < n; ++i) {
      const double want = oracle[static_cast<std::size_t>(i) * n + j];
      err = std::max(err, std::abs(z[i] - want));
      scale = std::max(scale, std::abs(want));
    }
  }
  return {err, scale};
}

} // namespace

SuiteResult verify_ras(int cases, std::uint64_t seed, double tol) {
  SuiteResult r;
  r.name = "ras";
  for (int c = 0; c < cases; ++c) {
    const std::uint64_t s = hash_combine(seed, static_cast<std::uint64_t>(c));
    SplitMix rng(s);
    const bool stokes = c % 2 == 1;
    Mesh mesh;
    LinearSystem sys;
    if (stokes) {
      mesh = channel_mesh(rng.uniform(1.0, 2.0), 3 + static_cast<int>(rng.below(2)), 2, 0.2, rng.next());
      StokesParams sp;
      sp.nu = rng.uniform(0.0005, 0.002);
      sys = assemble_stokes(mesh, sp);
    } else {
      mesh = random_rectangle_mesh(rng.next(), 4, 8);
      sys = assemble_convdiff(mesh, {rng.uniform(0, 100), {rng.uniform(-1, 1), rng.uniform(-1, 1)}, 1.0});
    }
    std::string problem;
    if (sys.J.nrows > 200) problem = "system too large for the dense oracle";
    for (int np : {1, 2, 4}) {
      for (int delta : {0, 1, 2}) {
        if (!problem.empty() || np > mesh.num_elements()) continue;
        try {
          const Partition part = extend_overlap(mesh, partition_mesh(mesh, np, s), delta);
          const auto [err, scale] = ras_discrepancy(sys, part);
          if (err > tol * std::max(1.0, scale)) {
            problem = "np=" + std::to_string(np) + " delta=" + std::to_string(delta) + " differs by " + num(err);
          }
        } catch (const Error& e) {
          problem = "np=" + std::to_string(np) + " delta=" + std::to_string(delta) + ": " + e.what();
        }
      }
    }
    record(r, std::string(stokes ? "stokes" : "convdiff") + " system " + std::to_string(c), problem);
  }
  return r;
}

std::string format_suite(const SuiteResult& r) {
  std::ostringstream os;
  os << r.name << ": " << r.passed << " passed, " << r.failed << " failed";
  return os.str();
}

} // namespace schwarz
