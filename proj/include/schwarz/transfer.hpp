#pragma once

#include "schwarz/linalg.hpp"
#include "schwarz/mesh.hpp"

#include <iosfwd>
#include <span>
#include <vector>

namespace schwarz {

/// Decomposition of a layout into per-variable layouts with at most one
/// unknown per geometric node.
struct FieldSplit {
  DofLayout layout;
  std::vector<DofLayout> fields;

  int num_fields() const { return static_cast<int>(fields.size()); }
};

/// Validates `spec` against `layout`: entries in {0, 1} and componentwise
/// sum equal to the layout.
FieldSplit split_fields(const DofLayout& layout, const std::vector<DofLayout>& spec);

/// Field f takes one unknown on every node class with z_s > f, so (3,2,0)
/// becomes (1,1,0) + (1,1,0) + (1,0,0).
FieldSplit default_split(const DofLayout& layout);

/// Nodes carrying field f and the global unknown each one holds there.
struct FieldNodes {
  std::vector<int> node;
  std::vector<int> dof;
};

FieldNodes field_nodes(const DofMap& dofmap, const FieldSplit& split, int field);

/// Global unknown indices of field f in node order (the extractor R_f).
std::vector<int> field_dofs(const DofMap& dofmap, const FieldSplit& split, int field);

struct MlsConfig {
  int poly_degree = 1;
  double radius_factor = 2.5;
  double growth = 1.5;
  double rank_tol = 1e-10;
  double max_condition = 1e12;
};

void validate_mls_config(const MlsConfig& cfg);

/// Compactly supported quartic 1 - 6r^2 + 8r^3 - 3r^4 with r = dist / rho.
/// Throws for dist outside [0, rho).
double mls_weight(double dist, double rho);

/// Uniform bucket grid over a point set.
class PointCloud {
public:
  PointCloud(std::vector<Point> points, double cell_size);

  /// Ids of points strictly closer than `radius` to `center`, ascending.
  std::vector<int> within(Point center, double radius) const;
  /// Id of the closest point (smallest id on ties).
  int nearest(Point center) const;

  const std::vector<Point>& points() const { return points_; }

private:
  std::vector<Point> points_;
  double cell_ = 1.0;
  double x0_ = 0.0, y0_ = 0.0;
  int nx_ = 1, ny_ = 1;
  std::vector<int> start_;
  std::vector<int> ids_;

  int cell_x(double x) const;
  int cell_y(double y) const;
};

struct Neighborhood {
  std::vector<int> ids;  ///< cloud point ids, ascending
  double radius = 0.0;
  int growth_steps = 0;
};

/// Grows the radius from `rho0` by cfg.growth until the weighted sample
/// matrix has full column rank (column-pivoted QR, relative tolerance
/// cfg.rank_tol). Only points with allowed[id] != 0 are used (empty span:
/// all). Throws GeometryError once the radius exceeds `max_radius`.
Neighborhood select_neighborhood(Point target, const PointCloud& cloud, std::span<const char> allowed, double rho0,
                                 const MlsConfig& cfg, double max_radius);

struct MlsFit {
  Point target;
  std::vector<int> neighbors;
  double radius = 0.0;
  std::vector<double> row;  ///< weights mapping neighbor samples to the value at target
  std::vector<double> p1;   ///< 3x3 moment matrix, row-major, local scaled basis
  double condition = 0.0;
};

/// Weighted least-squares fit of [1, x, y] around `target`. The basis is
/// evaluated in coordinates (x - target) / radius, so p(target) = e1 and
/// row_n = w_n (P1^-1 e1) . p_n. Throws GeometryError when cond(P1) exceeds
/// cfg.max_condition.
MlsFit mls_fit(Point target, std::span<const Point> neighbor_coords, std::span<const int> neighbor_ids, double radius,
               const MlsConfig& cfg);

/// Loss L(a) of the fit problem for coefficients a in the local basis.
double mls_loss(Point target, std::span<const Point> neighbor_coords, std::span<const double> samples, double radius,
                std::span<const double> a);

struct TransferOperator {
  CsrMatrix matrix;  ///< source unknowns -> target unknowns
  int from_level = -1;
  int to_level = -1;
  std::vector<double> row_radius;  ///< per target unknown
  std::vector<int> row_neighbors;  ///< per target unknown

  Vector apply(std::span<const double> source) const { return spmv(matrix, source); }
};

/// One MLS row per target unknown, built from source nodes of the same field
/// lying in the overlap region of the subdomain that owns the target node.
/// Both partitions must have the same np; the source partition's overlap
/// sets define the admissible region.
TransferOperator build_transfer(const Mesh& source_mesh, const DofMap& source_dofs, const Partition& source_partition,
                                const Mesh& target_mesh, const DofMap& target_dofs, const Partition& target_partition,
                                const FieldSplit& split, const MlsConfig& cfg);

/// "row col value" per stored entry.
void write_triplets(const TransferOperator& op, std::ostream& os);
/// "row radius neighbors" per target unknown.
void write_row_debug(const TransferOperator& op, std::ostream& os);

} // namespace schwarz
