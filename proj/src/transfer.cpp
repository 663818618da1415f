#include "schwarz/transfer.hpp"

#include "schwarz/error.hpp"
#include "schwarz/parallel.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

namespace schwarz {

namespace {

std::string layout_str(const DofLayout& l) {
  std::ostringstream os;
  os << '(' << l.z[0] << ',' << l.z[1] << ',' << l.z[2] << ')';
  return os.str();
}

} // namespace

FieldSplit split_fields(const DofLayout& layout, const std::vector<DofLayout>& spec) {
  validate_layout(layout);
  if (spec.empty()) throw ValidationError("field split needs at least one field");
  DofLayout sum{{0, 0, 0}};
  bool capped = true;
  for (const auto& f : spec) {
    for (int s = 0; s < 3; ++s) {
      if (f.z[s] < 0 || f.z[s] > 1) capped = false;
      sum.z[s] += f.z[s];
    }
  }
  if (!(sum == layout) || !capped) {
    std::string msg = "field split does not match the layout: fields sum to " + layout_str(sum) + ", layout is " +
                      layout_str(layout);
    if (!capped) msg += "; every field entry must be 0 or 1";
    throw ValidationError(msg);
  }
  return {layout, spec};
}

FieldSplit default_split(const DofLayout& layout) {
  validate_layout(layout);
  const int nf = *std::max_element(layout.z.begin(), layout.z.end());
  std::vector<DofLayout> fields(nf);
  for (int f = 0; f < nf; ++f)
    for (int s = 0; s < 3; ++s) fields[f].z[s] = layout.z[s] > f ? 1 : 0;
  return split_fields(layout, fields);
}

FieldNodes field_nodes(const DofMap& dofmap, const FieldSplit& split, int field) {
  if (!(dofmap.layout == split.layout)) throw ValidationError("field split was built for a different layout");
  if (field < 0 || field >= split.num_fields()) throw ValidationError("field index out of range");
  FieldNodes out;
  for (std::size_t n = 0; n < dofmap.nodes.size(); ++n) {
    const int s = dofmap.nodes[n].dim;
    if (split.fields[field].z[s] == 0) continue;
    int offset = 0;
    for (int g = 0; g < field; ++g) offset += split.fields[g].z[s];
    out.node.push_back(static_cast<int>(n));
    out.dof.push_back(dofmap.nodes[n].dof_start + offset);
  }
  return out;
}

std::vector<int> field_dofs(const DofMap& dofmap, const FieldSplit& split, int field) {
  return field_nodes(dofmap, split, field).dof;
}

void validate_mls_config(const MlsConfig& cfg) {
  if (cfg.poly_degree != 1) throw ValidationError("only linear MLS bases are supported");
  if (!(cfg.radius_factor > 0.0)) throw ValidationError("MLS radius factor must be positive");
  if (!(cfg.growth > 1.0)) throw ValidationError("MLS radius growth must exceed 1");
  if (!(cfg.rank_tol > 0.0 && cfg.rank_tol <= 1e-6)) throw ValidationError("MLS rank tolerance must lie in (0, 1e-6]");
  if (!(cfg.max_condition > 1.0)) throw ValidationError("MLS condition limit must exceed 1");
}

double mls_weight(double dist, double rho) {
  if (!(rho > 0.0) || !(dist >= 0.0) || !(dist < rho)) {
    throw ValidationError("MLS weight needs 0 <= dist < rho (dist " + std::to_string(dist) + ", rho " +
                          std::to_string(rho) + ")");
  }
  const double r = dist / rho;
  const double r2 = r * r;
  return 1.0 - 6.0 * r2 + 8.0 * r2 * r - 3.0 * r2 * r2;
}

PointCloud::PointCloud(std::vector<Point> points, double cell_size) : points_(std::move(points)) {
  if (points_.empty()) throw ValidationError("point cloud is empty");
  double x1 = points_[0].x, y1 = points_[0].y;
  x0_ = x1;
  y0_ = y1;
  for (const Point& p : points_) {
    x0_ = std::min(x0_, p.x);
    y0_ = std::min(y0_, p.y);
    x1 = std::max(x1, p.x);
    y1 = std::max(y1, p.y);
  }
  const double extent = std::max(x1 - x0_, y1 - y0_);
  cell_ = cell_size > 0.0 ? cell_size : (extent > 0.0 ? extent : 1.0);
  // Cap the grid so sparse clouds over large boxes stay cheap.
  const double min_cell = std::max(extent, 1e-300) / 2048.0;
  cell_ = std::max(cell_, min_cell);
  nx_ = static_cast<int>((x1 - x0_) / cell_) + 1;
  ny_ = static_cast<int>((y1 - y0_) / cell_) + 1;
  std::vector<int> count(static_cast<std::size_t>(nx_) * ny_ + 1, 0);
  std::vector<int> cell_of(points_.size());
  for (std::size_t i = 0; i < points_.size(); ++i) {
    cell_of[i] = cell_y(points_[i].y) * nx_ + cell_x(points_[i].x);
    ++count[cell_of[i] + 1];
  }
  for (std::size_t c = 1; c < count.size(); ++c) count[c] += count[c - 1];
  start_ = count;
  ids_.resize(points_.size());
  for (std::size_t i = 0; i < points_.size(); ++i) ids_[count[cell_of[i]]++] = static_cast<int>(i);
}

int PointCloud::cell_x(double x) const { return std::clamp(static_cast<int>((x - x0_) / cell_), 0, nx_ - 1); }
int PointCloud::cell_y(double y) const { return std::clamp(static_cast<int>((y - y0_) / cell_), 0, ny_ - 1); }

std::vector<int> PointCloud::within(Point center, double radius) const {
  std::vector<int> out;
  const int i0 = cell_x(center.x - radius), i1 = cell_x(center.x + radius);
  const int j0 = cell_y(center.y - radius), j1 = cell_y(center.y + radius);
  for (int j = j0; j <= j1; ++j) {
    for (int i = i0; i <= i1; ++i) {
      const int c = j * nx_ + i;
      for (int k = start_[c]; k < start_[c + 1]; ++k) {
        if (distance(points_[ids_[k]], center) < radius) out.push_back(ids_[k]);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

int PointCloud::nearest(Point center) const {
  const int ci = cell_x(center.x), cj = cell_y(center.y);
  int best = -1;
  double best_d = std::numeric_limits<double>::max();
  for (int ring = 0;; ++ring) {
    for (int j = cj - ring; j <= cj + ring; ++j) {
      for (int i = ci - ring; i <= ci + ring; ++i) {
        if (std::max(std::abs(i - ci), std::abs(j - cj)) != ring) continue;
        if (i < 0 || j < 0 || i >= nx_ || j >= ny_) continue;
        const int c = j * nx_ + i;
        for (int k = start_[c]; k < start_[c + 1]; ++k) {
          const double d = distance(points_[ids_[k]], center);
          if (d < best_d || (d == best_d && ids_[k] < best)) {
            best_d = d;
            best = ids_[k];
          }
        }
      }
    }
    // Cells beyond this ring are at least ring * cell away from the center cell.
    if (best >= 0 && best_d <= ring * cell_) return best;
    if (ring > nx_ + ny_) return best;
  }
}

namespace {

/// sqrt(w_n) * [1, dx, dy] in the local scaled basis.
Eigen::MatrixXd weighted_samples(Point target, std::span<const Point> pts, double radius) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(pts.size()), 3);
  for (std::size_t n = 0; n < pts.size(); ++n) {
    const double w = std::sqrt(mls_weight(distance(pts[n], target), radius));
    const auto r = static_cast<Eigen::Index>(n);
    m(r, 0) = w;
    m(r, 1) = w * (pts[n].x - target.x) / radius;
    m(r, 2) = w * (pts[n].y - target.y) / radius;
  }
  return m;
}

bool full_rank(Point target, std::span<const Point> pts, double radius, double tol) {
  if (pts.size() < 3) return false;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(weighted_samples(target, pts, radius));
  qr.setThreshold(tol);
  return qr.rank() == 3;
}

} // namespace

Neighborhood select_neighborhood(Point target, const PointCloud& cloud, std::span<const char> allowed, double rho0,
                                 const MlsConfig& cfg, double max_radius) {
  validate_mls_config(cfg);
  if (!(rho0 > 0.0)) throw ValidationError("initial MLS radius must be positive");
  Neighborhood nb;
  nb.radius = rho0;
  std::vector<Point> pts;
  while (true) {
    nb.ids.clear();
    pts.clear();
    for (int id : cloud.within(target, nb.radius)) {
      if (!allowed.empty() && !allowed[id]) continue;
      nb.ids.push_back(id);
      pts.push_back(cloud.points()[id]);
    }
    if (full_rank(target, pts, nb.radius, cfg.rank_tol)) return nb;
    if (nb.radius > max_radius) {
      throw GeometryError("MLS neighborhood stays rank deficient beyond radius " + std::to_string(nb.radius) + " (" +
                          std::to_string(nb.ids.size()) + " admissible nodes)");
    }
    nb.radius *= cfg.growth;
    ++nb.growth_steps;
  }
}

MlsFit mls_fit(Point target, std::span<const Point> neighbor_coords, std::span<const int> neighbor_ids, double radius,
               const MlsConfig& cfg) {
  if (neighbor_coords.size() != neighbor_ids.size()) throw DimensionError("mls_fit: coordinate and id counts differ");
  MlsFit fit;
  fit.target = target;
  fit.radius = radius;
  fit.neighbors.assign(neighbor_ids.begin(), neighbor_ids.end());
  const std::size_t n = neighbor_coords.size();

  std::vector<double> w(n);
  std::vector<Eigen::Vector3d> p(n);
  Eigen::Matrix3d p1 = Eigen::Matrix3d::Zero();
  for (std::size_t k = 0; k < n; ++k) {
    w[k] = mls_weight(distance(neighbor_coords[k], target), radius);
    p[k] = {1.0, (neighbor_coords[k].x - target.x) / radius, (neighbor_coords[k].y - target.y) / radius};
    p1 += w[k] * p[k] * p[k].transpose();
  }
  fit.p1.assign(p1.data(), p1.data() + 9);

  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(p1, Eigen::EigenvaluesOnly);
  const double lmin = eig.eigenvalues()(0), lmax = eig.eigenvalues()(2);
  fit.condition = lmin > 0.0 ? lmax / lmin : std::numeric_limits<double>::infinity();
  if (!(fit.condition <= cfg.max_condition)) {
    throw GeometryError("MLS moment matrix condition " + std::to_string(fit.condition) +
                        " exceeds the limit; grow the radius");
  }
  const auto ldlt = p1.ldlt();
  Eigen::Vector3d c = ldlt.solve(Eigen::Vector3d::UnitX());
  for (int step = 0; step < 2; ++step) c += ldlt.solve(Eigen::Vector3d::UnitX() - p1 * c);
  fit.row.resize(n);
  for (std::size_t k = 0; k < n; ++k) fit.row[k] = w[k] * c.dot(p[k]);
  // Correct the row itself against its reproduction residual; with a large
  // c the products above lose the digits that make the row sum to one.
  for (int step = 0; step < 2; ++step) {
    Eigen::Vector3d res = Eigen::Vector3d::UnitX();
    for (std::size_t k = 0; k < n; ++k) res -= fit.row[k] * p[k];
    const Eigen::Vector3d dc = ldlt.solve(res);
    for (std::size_t k = 0; k < n; ++k) fit.row[k] += w[k] * dc.dot(p[k]);
  }
  return fit;
}

double mls_loss(Point target, std::span<const Point> neighbor_coords, std::span<const double> samples, double radius,
                std::span<const double> a) {
  double loss = 0.0;
  for (std::size_t k = 0; k < neighbor_coords.size(); ++k) {
    const double w = mls_weight(distance(neighbor_coords[k], target), radius);
    const double px = (neighbor_coords[k].x - target.x) / radius, py = (neighbor_coords[k].y - target.y) / radius;
    const double e = a[0] + a[1] * px + a[2] * py - samples[k];
    loss += w * e * e;
  }
  return loss;
}

namespace {

/// Median length of the edges incident to each vertex.
std::vector<double> median_incident_edge(const Mesh& mesh) {
  std::vector<std::vector<double>> lengths(mesh.num_vertices());
  for (const auto& [a, b] : unique_edges(mesh)) {
    const double l = distance(mesh.vertices[a], mesh.vertices[b]);
    lengths[a].push_back(l);
    lengths[b].push_back(l);
  }
  std::vector<double> out(mesh.num_vertices(), 0.0);
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    auto& l = lengths[v];
    if (l.empty()) continue;
    std::sort(l.begin(), l.end());
    const std::size_t m = l.size();
    out[v] = m % 2 ? l[m / 2] : 0.5 * (l[m / 2 - 1] + l[m / 2]);
  }
  return out;
}

double average_edge(const Mesh& mesh) {
  const auto edges = unique_edges(mesh);
  double s = 0.0;
  for (const auto& [a, b] : edges) s += distance(mesh.vertices[a], mesh.vertices[b]);
  return edges.empty() ? 1.0 : s / static_cast<double>(edges.size());
}

} // namespace

TransferOperator build_transfer(const Mesh& source_mesh, const DofMap& source_dofs, const Partition& source_partition,
                                const Mesh& target_mesh, const DofMap& target_dofs, const Partition& target_partition,
                                const FieldSplit& split, const MlsConfig& cfg) {
  validate_mls_config(cfg);
  if (source_partition.np != target_partition.np) throw ValidationError("transfer partitions differ in np");
  if (static_cast<int>(source_partition.owner.size()) != source_mesh.num_elements() ||
      static_cast<int>(target_partition.owner.size()) != target_mesh.num_elements()) {
    throw ValidationError("transfer partition does not match its mesh");
  }
  const int np = source_partition.np;

  const auto median_edge = median_incident_edge(source_mesh);
  const double h_avg = average_edge(source_mesh);
  const PointCloud vertex_cloud(source_mesh.vertices, h_avg);

  double xmin = std::numeric_limits<double>::max(), ymin = xmin, xmax = -xmin, ymax = -xmin;
  for (const auto* m : {&source_mesh, &target_mesh}) {
    for (const Point& p : m->vertices) {
      xmin = std::min(xmin, p.x);
      xmax = std::max(xmax, p.x);
      ymin = std::min(ymin, p.y);
      ymax = std::max(ymax, p.y);
    }
  }
  const double diameter = std::hypot(xmax - xmin, ymax - ymin);

  // Source nodes inside each subdomain's overlap region.
  std::vector<std::vector<char>> in_region(np, std::vector<char>(source_dofs.nodes.size(), 0));
  for (int p = 0; p < np; ++p) {
    for (int k : source_partition.overlap_elements[p])
      for (int n : source_dofs.element_nodes(k)) in_region[p][n] = 1;
  }
  const auto target_first = target_dofs.node_first_element();

  std::vector<Triplet> triplets;
  TransferOperator op;
  op.row_radius.assign(target_dofs.total_dofs, 0.0);
  op.row_neighbors.assign(target_dofs.total_dofs, 0);

  for (int f = 0; f < split.num_fields(); ++f) {
    const FieldNodes src = field_nodes(source_dofs, split, f);
    const FieldNodes tgt = field_nodes(target_dofs, split, f);
    if (tgt.node.empty()) continue;
    if (src.node.empty()) throw GeometryError("field " + std::to_string(f) + " has no source nodes");
    std::vector<Point> coords(src.node.size());
    for (std::size_t i = 0; i < src.node.size(); ++i) coords[i] = source_dofs.nodes[src.node[i]].coords;
    const PointCloud cloud(coords, h_avg);
    std::vector<std::vector<char>> allowed(np, std::vector<char>(src.node.size(), 0));
    for (int p = 0; p < np; ++p)
      for (std::size_t i = 0; i < src.node.size(); ++i) allowed[p][i] = in_region[p][src.node[i]];

    std::vector<std::vector<Triplet>> rows(tgt.node.size());
    parallel_for(
        tgt.node.size(),
        [&](std::size_t t) {
          const int node = tgt.node[t];
          const Point x = target_dofs.nodes[node].coords;
          const int p = target_partition.owner[target_first[node]];
          const int near = vertex_cloud.nearest(x);
          double rho = cfg.radius_factor * median_edge[near];
          if (!(rho > 0.0)) rho = cfg.radius_factor * h_avg;
          try {
            while (true) {
              const Neighborhood nb = select_neighborhood(x, cloud, allowed[p], rho, cfg, diameter);
              std::vector<Point> pts(nb.ids.size());
              for (std::size_t i = 0; i < nb.ids.size(); ++i) pts[i] = coords[nb.ids[i]];
              try {
                const MlsFit fit = mls_fit(x, pts, nb.ids, nb.radius, cfg);
                const int row = tgt.dof[t];
                op.row_radius[row] = nb.radius;
                op.row_neighbors[row] = static_cast<int>(nb.ids.size());
                for (std::size_t i = 0; i < nb.ids.size(); ++i) rows[t].push_back({row, src.dof[nb.ids[i]], fit.row[i]});
                break;
              } catch (const GeometryError&) {
                if (nb.radius > diameter) throw;
                rho = nb.radius * cfg.growth;
              }
            }
          } catch (const GeometryError& e) {
            throw GeometryError("transfer row for target node " + std::to_string(node) + ": " + e.what());
          }
        },
        64);
    for (auto& r : rows) triplets.insert(triplets.end(), r.begin(), r.end());
  }
  op.matrix = CsrMatrix::from_triplets(target_dofs.total_dofs, source_dofs.total_dofs, std::move(triplets));
  return op;
}

void write_triplets(const TransferOperator& op, std::ostream& os) {
  os.precision(17);
  const CsrMatrix& m = op.matrix;
  for (int i = 0; i < m.nrows; ++i)
    for (int p = m.row_ptr[i]; p < m.row_ptr[i + 1]; ++p) os << i << ' ' << m.col_idx[p] << ' ' << m.values[p] << '\n';
}

void write_row_debug(const TransferOperator& op, std::ostream& os) {
  os.precision(17);
  for (std::size_t i = 0; i < op.row_radius.size(); ++i) os << i << ' ' << op.row_radius[i] << ' ' << op.row_neighbors[i] << '\n';
}

} // namespace schwarz
