#include "doctest.h"

#include "schwarz/disc.hpp"
#include "schwarz/error.hpp"
#include "schwarz/fixtures.hpp"
#include "schwarz/parallel.hpp"

#include <Eigen/Dense>

#include <cmath>

using namespace schwarz;

namespace {

Eigen::MatrixXd dense(const CsrMatrix& a) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(a.nrows, a.ncols);
  for (int i = 0; i < a.nrows; ++i)
    for (int p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p) m(i, a.col_idx[p]) = a.values[p];
  return m;
}

Vector dense_solve(const LinearSystem& sys) {
  const auto f = lu_factor(DenseMatrix::from_csr(sys.J));
  return lu_solve(f, sys.b);
}

Mesh structured_square(int n) {
  GridMeshSpec spec;
  spec.nx = spec.ny = n;
  return grid_mesh(spec);
}

struct Poiseuille {
  double nu, length;
  Point velocity(Point p) const { return {4.0 * p.y * (1.0 - p.y), 0.0}; }
  double pressure(Point p) const { return 8.0 * nu * (length - p.x); }
};

StokesParams poiseuille_params(const Poiseuille& exact) {
  StokesParams params;
  params.nu = exact.nu;
  const double nu = exact.nu;
  params.outlet_traction = [nu](Point p) { return Point{0.0, 4.0 * nu * (1.0 - 2.0 * p.y)}; };
  return params;
}

Vector interpolate(const DofMap& dofs, const Poiseuille& exact) {
  Vector x(dofs.total_dofs, 0.0);
  for (const auto& n : dofs.nodes) {
    const Point u = exact.velocity(n.coords);
    x[n.dof_start] = u.x;
    x[n.dof_start + 1] = u.y;
    if (n.dim == 0) x[n.dof_start + 2] = exact.pressure(n.coords);
  }
  return x;
}

} // namespace

TEST_CASE("two-cell finite volume system by hand") {
  const Mesh m = unit_square_mesh();
  const double tb = 6.0 / std::sqrt(5.0);
  const auto diffusion = assemble_convdiff(m, {0.0, {1, 0}, 1.0});
  REQUIRE(diffusion.J.nrows == 2);
  CHECK(diffusion.J.at(0, 0) == doctest::Approx(3.0 + 2 * tb).epsilon(1e-14));
  CHECK(diffusion.J.at(0, 1) == doctest::Approx(-3.0).epsilon(1e-14));
  CHECK(diffusion.J.at(1, 0) == doctest::Approx(-3.0).epsilon(1e-14));
  CHECK(diffusion.b[0] == doctest::Approx(0.5));

  // Flow in +x: cell 0 (lower right) receives from cell 1 across the diagonal
  // and drains through x = 1; cell 1 drains into cell 0.
  const auto conv = assemble_convdiff(m, {1.0, {1, 0}, 1.0});
  CHECK(conv.J.at(0, 0) == doctest::Approx(3.0 + 2 * tb + 1.0).epsilon(1e-14));
  CHECK(conv.J.at(0, 1) == doctest::Approx(-4.0).epsilon(1e-14));
  CHECK(conv.J.at(1, 1) == doctest::Approx(3.0 + 2 * tb + 1.0).epsilon(1e-14));
  CHECK(conv.J.at(1, 0) == doctest::Approx(-3.0).epsilon(1e-14));
}

TEST_CASE("single cell has a positive solution") {
  Mesh m;
  m.vertices = {{0, 0}, {1, 0}, {0, 1}};
  m.elements = {{0, 1, 2}};
  m.boundary_marker = {1, 1, 1};
  for (double beta : {0.0, 1.0, 100.0}) {
    const auto sys = assemble_convdiff(m, {beta, {1, 0}, 1.0});
    REQUIRE(sys.J.nrows == 1);
    REQUIRE(sys.J.nnz() == 1);
    CHECK(sys.J.at(0, 0) > 0.0);
    CHECK(sys.b[0] / sys.J.at(0, 0) > 0.0);
  }
}

TEST_CASE("zero data gives the zero solution") {
  const Mesh m = random_rectangle_mesh(5, 3, 6);
  const auto sys = assemble_convdiff(m, {10.0, {1, 0}, 0.0});
  const Vector u = dense_solve(sys);
  for (double v : u) CHECK(v == 0.0);
}

TEST_CASE("pure diffusion is symmetric positive definite") {
  for (int n : {3, 5, 7}) {
    const auto sys = assemble_convdiff(structured_square(n), {0.0, {1, 0}, 1.0});
    REQUIRE(sys.J.nrows <= 100);
    const Eigen::MatrixXd a = dense(sys.J);
    CHECK((a - a.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    const Eigen::LLT<Eigen::MatrixXd> llt(a);
    CHECK(llt.info() == Eigen::Success);
  }
}

TEST_CASE("flux pairs and upwind sign pattern on random meshes") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Mesh m = random_rectangle_mesh(seed);
    const auto sym = assemble_convdiff(m, {0.0, {1, 0}, 1.0});
    for (int i = 0; i < sym.J.nrows; ++i)
      for (int p = sym.J.row_ptr[i]; p < sym.J.row_ptr[i + 1]; ++p) CHECK(sym.J.values[p] == sym.J.at(sym.J.col_idx[p], i));
    const double angle = 0.7 * static_cast<double>(seed);
    for (double beta : {1.0, 10.0, 100.0}) {
      const auto sys = assemble_convdiff(m, {beta, {std::cos(angle), std::sin(angle)}, 1.0});
      double scale = 0;
      for (double v : sys.J.values) scale = std::max(scale, std::abs(v));
      for (int i = 0; i < sys.J.nrows; ++i) {
        double row_sum = 0;
        for (int p = sys.J.row_ptr[i]; p < sys.J.row_ptr[i + 1]; ++p) {
          row_sum += sys.J.values[p];
          if (sys.J.col_idx[p] == i) {
            CHECK(sys.J.values[p] > 0.0);
          } else {
            CHECK(sys.J.values[p] <= 0.0);
          }
        }
        CHECK(row_sum >= -1e-12 * scale);
      }
      // Cell plus edge neighbours.
      for (int i = 0; i < sys.J.nrows; ++i) CHECK(sys.J.row_ptr[i + 1] - sys.J.row_ptr[i] <= 4);
    }
  }
}

TEST_CASE("assembly is bit identical across runs and worker counts") {
  const Mesh m = notched_rectangle_mesh(20, 10, 3);
  const auto a = assemble_convdiff(m, {10.0, {1, 0}, 1.0});
  set_worker_count(4);
  const auto b = assemble_convdiff(m, {10.0, {1, 0}, 1.0});
  const Mesh c = channel_mesh(2.0, 8, 4, 0.2, 1);
  const auto s1 = assemble_stokes(c, {});
  set_worker_count(0);
  const auto s2 = assemble_stokes(c, {});
  CHECK(a.J.row_ptr == b.J.row_ptr);
  CHECK(a.J.col_idx == b.J.col_idx);
  CHECK(a.J.values == b.J.values);
  CHECK(a.b == b.b);
  CHECK(s1.J.col_idx == s2.J.col_idx);
  CHECK(s1.J.values == s2.J.values);
  CHECK(s1.b == s2.b);
}

TEST_CASE("missing boundary tags are listed") {
  try {
    assemble_stokes(unit_square_mesh(), {});
    FAIL("expected a tag error");
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("2, 3") != std::string::npos);
  }
  StokesParams bad;
  bad.nu = 0.0;
  CHECK_THROWS_AS(assemble_stokes(channel_mesh(2.0, 4, 2, 0.0, 0), bad), ValidationError);
}

TEST_CASE("boundary classes of Taylor-Hood nodes") {
  const Mesh m = channel_mesh(2.0, 4, 2, 0.0, 0);
  const DofMap dofs = build_dof_map(m, {{3, 2, 0}});
  const auto tags = stokes_node_tags(m, dofs);
  for (std::size_t n = 0; n < dofs.nodes.size(); ++n) {
    const Point p = dofs.nodes[n].coords;
    const bool on_left = std::abs(p.x) < 1e-12, on_right = std::abs(p.x - 2.0) < 1e-12;
    const bool on_wall = std::abs(p.y) < 1e-12 || std::abs(p.y - 1.0) < 1e-12;
    if (on_left) {
      CHECK(tags[n] == kInletTag);
    } else if (on_right && !on_wall) {
      CHECK(tags[n] == kOutletTag);
    } else if (on_wall) {
      // Wall, or inlet on the wall edge touching an inlet corner; both fix u = 0 there.
      CHECK((tags[n] == kWallTag || tags[n] == kInletTag));
    } else {
      CHECK(tags[n] == 0);
    }
  }
}

TEST_CASE("straight channel reproduces Poiseuille flow") {
  for (std::uint64_t seed : {0ULL, 1ULL, 2ULL}) {
    const Poiseuille exact{1.0 / 1000.0, 2.0};
    const Mesh m = channel_mesh(2.0, 8, 4, seed == 0 ? 0.0 : 0.2, seed);
    const auto sys = assemble_stokes(m, poiseuille_params(exact));
    REQUIRE(sys.J.nrows <= 600);
    const Vector x = dense_solve(sys);
    const Vector ref = interpolate(sys.dofmap, exact);
    double err = 0, scale = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      err = std::max(err, std::abs(x[i] - ref[i]));
      scale = std::max(scale, std::abs(ref[i]));
    }
    CHECK(err <= 1e-8 * scale);

    // Divergence rows of the interpolated exact solution.
    const Vector r = spmv(sys.J, ref);
    for (const auto& n : sys.dofmap.nodes) {
      if (n.dim != 0) continue;
      const int p = n.dof_start + 2;
      CHECK(std::abs(r[p] - sys.b[p]) <= 1e-9);
    }
  }
}

TEST_CASE("viscous block is linear in viscosity") {
  const Mesh m = channel_mesh(2.0, 6, 3, 0.2, 4);
  StokesParams a, b;
  a.nu = 1.0 / 500.0;
  b.nu = 2.0 / 500.0;
  const auto sa = assemble_stokes(m, a), sb = assemble_stokes(m, b);
  REQUIRE(sa.J.col_idx == sb.J.col_idx);
  const DofMap& dofs = sa.dofmap;
  std::vector<char> pressure(dofs.total_dofs, 0);
  for (const auto& n : dofs.nodes)
    if (n.dim == 0) pressure[n.dof_start + 2] = 1;
  const auto tags = stokes_node_tags(m, dofs);
  std::vector<char> fixed(dofs.total_dofs, 0);
  for (std::size_t n = 0; n < dofs.nodes.size(); ++n)
    if (tags[n] == kWallTag || tags[n] == kInletTag) fixed[dofs.nodes[n].dof_start] = fixed[dofs.nodes[n].dof_start + 1] = 1;
  int checked = 0;
  for (int i = 0; i < sa.J.nrows; ++i) {
    for (int p = sa.J.row_ptr[i]; p < sa.J.row_ptr[i + 1]; ++p) {
      const int j = sa.J.col_idx[p];
      if (pressure[i] || pressure[j] || fixed[i]) {
        CHECK(sa.J.values[p] == sb.J.values[p]);
      } else {
        CHECK(sb.J.values[p] == 2.0 * sa.J.values[p]);
        ++checked;
      }
    }
  }
  CHECK(checked > 0);
}

TEST_CASE("Stokes block structure") {
  const Mesh m = channel_mesh(2.0, 6, 3, 0.2, 5);
  const auto sys = assemble_stokes(m, {});
  const DofMap& dofs = sys.dofmap;
  const auto tags = stokes_node_tags(m, dofs);
  std::vector<char> fixed(dofs.total_dofs, 0);
  for (std::size_t n = 0; n < dofs.nodes.size(); ++n)
    if (tags[n] == kWallTag || tags[n] == kInletTag) fixed[dofs.nodes[n].dof_start] = fixed[dofs.nodes[n].dof_start + 1] = 1;
  for (int i = 0; i < sys.J.nrows; ++i) {
    if (fixed[i]) {
      CHECK(sys.J.row_ptr[i + 1] - sys.J.row_ptr[i] == 1);
      CHECK(sys.J.at(i, i) == 1.0);
      continue;
    }
    // Free rows and columns form a symmetric saddle point matrix.
    for (int p = sys.J.row_ptr[i]; p < sys.J.row_ptr[i + 1]; ++p) {
      const int j = sys.J.col_idx[p];
      if (!fixed[j]) CHECK(std::abs(sys.J.values[p] - sys.J.at(j, i)) <= 1e-15 * (1 + std::abs(sys.J.values[p])));
    }
  }
  for (const auto& n : dofs.nodes) {
    if (n.dim != 0) continue;
    const int p = n.dof_start + 2;
    CHECK(sys.J.find(p, p) >= 0);
    CHECK(sys.J.at(p, p) == 0.0);
  }
}

TEST_CASE("Stokes systems are nonsingular on tagged meshes") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const int nx = 3 + static_cast<int>(seed % 3), ny = 2 + static_cast<int>(seed % 2);
    const Mesh m = channel_mesh(1.0 + 0.5 * static_cast<double>(seed), nx, ny, 0.2, seed);
    const auto sys = assemble_stokes(m, {});
    REQUIRE(sys.J.nrows <= 600);
    CHECK_NOTHROW(lu_factor(DenseMatrix::from_csr(sys.J)));
  }
  const Mesh pipe = pipe_mesh(2, 0);
  const auto sys = assemble_stokes(pipe, {});
  REQUIRE(sys.J.nrows <= 600);
  CHECK_NOTHROW(lu_factor(DenseMatrix::from_csr(sys.J)));
}

TEST_CASE("problem descriptors") {
  const auto cd = convdiff_problem({10.0, {1, 0}, 1.0});
  CHECK(cd.layout == DofLayout{{0, 0, 1}});
  CHECK(cd.split.num_fields() == 1);
  const Mesh m = random_rectangle_mesh(1);
  CHECK(cd.assemble(m).J.nrows == m.num_elements());
  const auto st = stokes_problem({});
  CHECK(st.layout == DofLayout{{3, 2, 0}});
  CHECK(st.split.num_fields() == 3);
}
