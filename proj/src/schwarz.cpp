#include "schwarz/schwarz.hpp"

#include "schwarz/error.hpp"
#include "schwarz/parallel.hpp"
#include "schwarz/random.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <chrono>
#include <numeric>
#include <sstream>

namespace schwarz {

std::string to_string(LocalSolver s) { return s == LocalSolver::lu ? "lu" : "ilu"; }

LocalSolver parse_local_solver(const std::string& name, int* ilu_level) {
  if (name == "lu") {
    if (ilu_level) *ilu_level = 0;
    return LocalSolver::lu;
  }
  if (name.size() > 3 && name.rfind("ilu", 0) == 0 &&
      std::all_of(name.begin() + 3, name.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    if (ilu_level) *ilu_level = std::stoi(name.substr(3));
    return LocalSolver::ilu;
  }
  throw ValidationError("unknown subdomain solver '" + name + "' (expected lu, ilu0, ilu1, ...)");
}

namespace {

class SparseLuFactor final : public LocalFactor {
public:
  SparseLuFactor(const CsrMatrix& a, int subdomain) {
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(a.values.size());
    for (int i = 0; i < a.nrows; ++i)
      for (int p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p) t.emplace_back(i, a.col_idx[p], a.values[p]);
    Eigen::SparseMatrix<double> m(a.nrows, a.ncols);
    m.setFromTriplets(t.begin(), t.end());
    m.makeCompressed();
    lu_.analyzePattern(m);
    lu_.factorize(m);
    if (lu_.info() != Eigen::Success) {
      throw SingularMatrixError("subdomain " + std::to_string(subdomain) + ": LU failed: " + lu_.lastErrorMessage());
    }
  }

  void solve(std::span<const double> rhs, std::span<double> out) const override {
    const Eigen::Map<const Eigen::VectorXd> b(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
    Eigen::Map<Eigen::VectorXd>(out.data(), static_cast<Eigen::Index>(out.size())) = lu_.solve(b);
  }

private:
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu_;
};

class IluLocalFactor final : public LocalFactor {
public:
  IluLocalFactor(const CsrMatrix& a, int level, int subdomain) {
    try {
      f_ = ilu_factor(a, level);
    } catch (const SingularMatrixError& e) {
      throw SingularMatrixError("subdomain " + std::to_string(subdomain) + ": " + e.what());
    }
  }

  void solve(std::span<const double> rhs, std::span<double> out) const override {
    const Vector x = ilu_solve(f_, rhs);
    std::copy(x.begin(), x.end(), out.begin());
  }

private:
  IluFactor f_;
};

} // namespace

RasPreconditioner build_ras(const CsrMatrix& J, const DofMap& dofmap, const Partition& partition, LocalSolver solver,
                            int ilu_level) {
  if (J.nrows != J.ncols || J.nrows != dofmap.total_dofs) {
    throw DimensionError("RAS: matrix is " + std::to_string(J.nrows) + "x" + std::to_string(J.ncols) + " but the layout has " +
                         std::to_string(dofmap.total_dofs) + " unknowns");
  }
  if (static_cast<int>(partition.owner.size()) != dofmap.num_elements) {
    throw DimensionError("RAS: partition does not match the mesh");
  }
  if (ilu_level < 0) throw ValidationError("ILU level must be non-negative");
  const auto sub = subdomain_dofs(dofmap, partition);

  std::vector<int> component(dofmap.total_dofs, 0);
  for (const auto& n : dofmap.nodes)
    for (int c = 0; c < dofmap.layout.z[n.dim]; ++c) component[n.dof_start + c] = c;

  RasPreconditioner ras;
  ras.size = J.nrows;
  ras.solver = solver;
  ras.ilu_level = ilu_level;
  ras.subdomains.resize(partition.np);
  parallel_for(partition.np, [&](std::size_t pp) {
    const int p = static_cast<int>(pp);
    RasSubdomain& s = ras.subdomains[p];
    s.overlap = sub.overlap[p];
    std::sort(s.overlap.begin(), s.overlap.end(),
              [&](int a, int b) { return component[a] != component[b] ? component[a] < component[b] : a < b; });
    s.owned = sub.owned[p];
    std::vector<int> where(s.overlap.size());
    std::iota(where.begin(), where.end(), 0);
    std::sort(where.begin(), where.end(), [&](int a, int b) { return s.overlap[a] < s.overlap[b]; });
    s.owned_local.reserve(s.owned.size());
    for (int g : s.owned) {
      const auto it = std::lower_bound(where.begin(), where.end(), g, [&](int w, int v) { return s.overlap[w] < v; });
      if (it == where.end() || s.overlap[*it] != g) {
        throw ValidationError("RAS: owned unknown " + std::to_string(g) + " of subdomain " + std::to_string(p) +
                              " lies outside its overlap region");
      }
      s.owned_local.push_back(*it);
    }
    s.local = extract_submatrix(J, s.overlap);
    if (s.overlap.empty()) return;
    if (solver == LocalSolver::lu) {
      s.factor = std::make_shared<SparseLuFactor>(s.local, p);
    } else {
      s.factor = std::make_shared<IluLocalFactor>(s.local, ilu_level, p);
    }
  });
  return ras;
}

Vector apply_ras(const RasPreconditioner& ras, std::span<const double> r) {
  if (static_cast<int>(r.size()) != ras.size) {
    throw DimensionError("RAS: vector of length " + std::to_string(r.size()) + ", expected " + std::to_string(ras.size));
  }
  Vector z(r.size(), 0.0);
  parallel_for(ras.subdomains.size(), [&](std::size_t p) {
    const RasSubdomain& s = ras.subdomains[p];
    if (s.overlap.empty()) return;
    Vector local(s.overlap.size()), sol(s.overlap.size());
    for (std::size_t i = 0; i < s.overlap.size(); ++i) local[i] = r[s.overlap[i]];
    s.factor->solve(local, sol);
    for (std::size_t i = 0; i < s.owned.size(); ++i) z[s.owned[i]] = sol[s.owned_local[i]];
  });
  return z;
}

Vector smooth(const RasPreconditioner& ras, const CsrMatrix& J, std::span<const double> z0, std::span<const double> r,
              int its) {
  if (its < 0) throw ValidationError("smoothing steps must be non-negative");
  if (z0.size() != r.size() || static_cast<int>(r.size()) != J.nrows) throw DimensionError("smooth: size mismatch");
  Vector z(z0.begin(), z0.end());
  Vector res(r.size());
  bool zero = std::all_of(z.begin(), z.end(), [](double v) { return v == 0.0; });
  for (int n = 0; n < its; ++n) {
    if (zero) {
      std::copy(r.begin(), r.end(), res.begin());
      zero = false;
    } else {
      spmv(J, z, res);
      for (std::size_t i = 0; i < res.size(); ++i) res[i] = r[i] - res[i];
    }
    const Vector dz = apply_ras(ras, res);
    axpy(1.0, dz, z);
  }
  return z;
}

void validate_hierarchy_config(const HierarchyConfig& cfg) {
  if (cfg.levels < 1) throw ValidationError("levels must be at least 1");
  if (cfg.np < 1) throw ValidationError("np must be at least 1");
  if (cfg.delta < 0) throw ValidationError("overlap must be non-negative");
  if (cfg.its < 0) throw ValidationError("smoothing steps must be non-negative");
  if (cfg.ilu_level < 0) throw ValidationError("ILU level must be non-negative");
  if (cfg.coarsen.max_rounds < 1) throw ValidationError("coarsening rounds must be at least 1");
  validate_mls_config(cfg.mls);
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

} // namespace

Hierarchy build_hierarchy(const Mesh& mesh0, const Discretization& problem, const HierarchyConfig& cfg) {
  validate_hierarchy_config(cfg);
  validate_mesh(mesh0);
  if (cfg.np > mesh0.num_elements()) {
    throw ValidationError("np = " + std::to_string(cfg.np) + " exceeds the " + std::to_string(mesh0.num_elements()) +
                          " elements of the finest mesh");
  }
  Hierarchy h;
  h.config = cfg;
  h.split = problem.split;

  auto t0 = std::chrono::steady_clock::now();
  HierarchyLevel first;
  first.mesh = mesh0;
  first.partition = extend_overlap(mesh0, partition_mesh(mesh0, cfg.np, cfg.seed), cfg.delta);
  h.levels.push_back(std::move(first));
  for (int i = 1; i < cfg.levels; ++i) {
    const HierarchyLevel& prev = h.levels.back();
    CoarsenConfig cc = cfg.coarsen;
    cc.seed = hash_combine(cfg.coarsen.seed, static_cast<std::uint64_t>(i));
    CoarsenResult cr = coarsen(prev.mesh, prev.partition, cc);
    if (cr.mesh.num_vertices() >= prev.mesh.num_vertices()) {
      throw GeometryError("coarsening stagnated building level " + std::to_string(i) + ": no interior vertex removed");
    }
    if (cr.partition.np != cfg.np) {
      throw GeometryError("level " + std::to_string(i) + " has " + std::to_string(cr.mesh.num_elements()) +
                          " elements, too few for " + std::to_string(cfg.np) + " subdomains");
    }
    HierarchyLevel next;
    next.mesh = std::move(cr.mesh);
    next.partition = std::move(cr.partition);
    next.rounds = std::move(cr.rounds);
    h.levels.push_back(std::move(next));
  }
  for (auto& level : h.levels) level.dofs = build_dof_map(level.mesh, problem.layout);
  h.coarsen_time_s = seconds_since(t0);

  t0 = std::chrono::steady_clock::now();
  for (int i = 0; i + 1 < h.num_levels(); ++i) {
    const auto& f = h.levels[i];
    const auto& c = h.levels[i + 1];
    h.restriction.push_back(build_transfer(f.mesh, f.dofs, f.partition, c.mesh, c.dofs, c.partition, h.split, cfg.mls));
    h.restriction.back().from_level = i;
    h.restriction.back().to_level = i + 1;
    h.prolongation.push_back(build_transfer(c.mesh, c.dofs, c.partition, f.mesh, f.dofs, f.partition, h.split, cfg.mls));
    h.prolongation.back().from_level = i + 1;
    h.prolongation.back().to_level = i;
  }
  h.transfer_time_s = seconds_since(t0);

  assemble_operators(h, problem);
  return h;
}

void assemble_operators(Hierarchy& h, const Discretization& problem) {
  for (auto& level : h.levels) {
    if (!(level.dofs.layout == problem.layout)) throw ValidationError("problem layout differs from the hierarchy's");
    LinearSystem sys = problem.assemble(level.mesh);
    level.J = std::move(sys.J);
    level.ras = build_ras(level.J, level.dofs, level.partition, h.config.solver, h.config.ilu_level);
  }
}

Vector apply_vcycle(const Hierarchy& h, std::span<const double> b) {
  const int levels = h.num_levels();
  if (levels == 0) throw ValidationError("empty hierarchy");
  if (static_cast<int>(b.size()) != h.levels[0].J.nrows) {
    throw DimensionError("V-cycle: vector of length " + std::to_string(b.size()) + ", expected " +
                         std::to_string(h.levels[0].J.nrows));
  }
  const int its = h.config.its;
  std::vector<Vector> r(levels), z(levels);
  r[0].assign(b.begin(), b.end());
  for (int i = 0; i < levels; ++i) {
    const auto& lv = h.levels[i];
    const Vector zero(lv.J.nrows, 0.0);
    z[i] = smooth(lv.ras, lv.J, zero, r[i], its);
    if (i + 1 < levels) {
      Vector res = spmv(lv.J, z[i]);
      for (std::size_t k = 0; k < res.size(); ++k) res[k] = r[i][k] - res[k];
      r[i + 1] = h.restriction[i].apply(res);
    }
  }
  for (int i = levels - 2; i >= 0; --i) {
    const auto& lv = h.levels[i];
    Vector start = h.prolongation[i].apply(z[i + 1]);
    axpy(1.0, z[i], start);
    z[i] = smooth(lv.ras, lv.J, start, r[i], its);
  }
  return z[0];
}

std::string format_hierarchy(const Hierarchy& h) {
  std::ostringstream os;
  os << "# level NV NE dofs nnz\n";
  for (int i = 0; i < h.num_levels(); ++i) {
    const auto& lv = h.levels[i];
    os << i << ' ' << lv.mesh.num_vertices() << ' ' << lv.mesh.num_elements() << ' ' << lv.dofs.total_dofs << ' '
       << lv.J.nnz() << '\n';
  }
  return os.str();
}

} // namespace schwarz
