#pragma once

#include "schwarz/coarsen.hpp"
#include "schwarz/disc.hpp"
#include "schwarz/linalg.hpp"
#include "schwarz/mesh.hpp"
#include "schwarz/transfer.hpp"

#include <memory>
#include <span>
#include <string>
#include <vector>

namespace schwarz {

enum class LocalSolver { lu, ilu };

std::string to_string(LocalSolver s);
/// Accepts "lu", "ilu0" and "iluK" for a level K.
LocalSolver parse_local_solver(const std::string& name, int* ilu_level);

/// Factorization of one extracted subdomain block.
class LocalFactor {
public:
  virtual ~LocalFactor() = default;
  virtual void solve(std::span<const double> rhs, std::span<double> out) const = 0;
};

struct RasSubdomain {
  std::vector<int> overlap;      ///< global unknowns of the overlap-delta region, in local order
  std::vector<int> owned;        ///< global unknowns owned by this subdomain
  std::vector<int> owned_local;  ///< position of each owned unknown inside `overlap`
  CsrMatrix local;               ///< J restricted to `overlap` rows and columns
  std::shared_ptr<const LocalFactor> factor;
};

struct RasPreconditioner {
  int size = 0;
  LocalSolver solver = LocalSolver::lu;
  int ilu_level = 0;
  std::vector<RasSubdomain> subdomains;
};

/// Local order places unknowns by their component within the node (so the
/// pressure of a (3,2,0) layout comes last), then by global index. Factors
/// eagerly, one subdomain per task. LU is a sparse direct factorization;
/// ILU uses `ilu_level` levels of fill. A singular block raises
/// SingularMatrixError naming the subdomain.
RasPreconditioner build_ras(const CsrMatrix& J, const DofMap& dofmap, const Partition& partition, LocalSolver solver,
                            int ilu_level = 0);

/// z = sum_p (R0_p)^T (J_p)^-1 R_p r.
Vector apply_ras(const RasPreconditioner& ras, std::span<const double> r);

/// `its` Richardson steps z <- z + B^-1 (r - J z) starting from z0.
Vector smooth(const RasPreconditioner& ras, const CsrMatrix& J, std::span<const double> z0, std::span<const double> r,
              int its);

struct HierarchyConfig {
  int levels = 1;
  int np = 4;
  int delta = 1;
  int its = 3;
  LocalSolver solver = LocalSolver::lu;
  int ilu_level = 0;
  std::uint64_t seed = 0;
  CoarsenConfig coarsen;
  MlsConfig mls;
};

void validate_hierarchy_config(const HierarchyConfig& cfg);

struct HierarchyLevel {
  Mesh mesh;
  Partition partition;
  DofMap dofs;
  CsrMatrix J;
  RasPreconditioner ras;
  std::vector<RoundStats> rounds;  ///< coarsening rounds that produced this level (empty on level 0)
};

struct Hierarchy {
  HierarchyConfig config;
  FieldSplit split;
  std::vector<HierarchyLevel> levels;
  std::vector<TransferOperator> restriction;   ///< level i -> i + 1
  std::vector<TransferOperator> prolongation;  ///< level i + 1 -> i
  double coarsen_time_s = 0.0;   ///< mesh coarsening and partitioning
  double transfer_time_s = 0.0;  ///< building both transfer directions

  int num_levels() const { return static_cast<int>(levels.size()); }
};

/// Meshes, partitions and transfers for `cfg.levels` levels, then operators
/// for `problem`. Each coarse mesh comes from cfg.coarsen.max_rounds sweeps
/// of the previous one; its partition replays the finest level's bisection.
/// Throws GeometryError naming the level when coarsening removes nothing.
Hierarchy build_hierarchy(const Mesh& mesh0, const Discretization& problem, const HierarchyConfig& cfg);

/// Re-discretizes `problem` on every level and refactors the smoothers,
/// keeping meshes and transfers. The problem must use the hierarchy's layout.
void assemble_operators(Hierarchy& h, const Discretization& problem);

/// One V-cycle with zero initial guess on every level: `its` pre-smoothing
/// steps going down, restricted residuals, prolongated corrections and `its`
/// post-smoothing steps going up. The coarsest level is only smoothed.
Vector apply_vcycle(const Hierarchy& h, std::span<const double> b);

/// Per level: "level NV NE dofs nnz".
std::string format_hierarchy(const Hierarchy& h);

} // namespace schwarz
