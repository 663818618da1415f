#include "doctest.h"

#include "schwarz/fixtures.hpp"
#include "schwarz/mesh.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

namespace fs = std::filesystem;
using namespace schwarz;

namespace {

const fs::path kWork = fs::path(SCHWARZ_WORK_DIR);

struct Result {
  int code;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Result run(const std::string& args) {
  fs::create_directories(kWork);
  const fs::path out = kWork / "stdout.txt", err = kWork / "stderr.txt";
  const std::string cmd = "cd '" + kWork.string() + "' && '" + std::string(SCHWARZ_CLI) + "' " + args + " > '" +
                          out.string() + "' 2> '" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(p));
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

/// Report rows with the two time columns dropped.
std::string without_times(const fs::path& p) {
  std::string out;
  for (const auto& row : read_csv(p)) {
    for (std::size_t i = 0; i + 2 < row.size(); ++i) out += row[i] + ",";
    out += "\n";
  }
  return out;
}

void write_fixture(const Mesh& m, const std::string& name) {
  fs::create_directories(kWork);
  save_mesh(m, kWork / name);
}

} // namespace

TEST_CASE("coarsen writes coarse meshes and statistics") {
  GridMeshSpec spec;
  spec.nx = spec.ny = 12;
  spec.jitter = 0.2;
  spec.random_diagonals = true;
  write_fixture(grid_mesh(spec), "square");
  fs::remove_all(kWork / "coarse");
  const auto r = run("coarsen --mesh square --rounds 4 --np 2 --levels 3 --out coarse");
  CHECK(r.code == 0);
  CHECK(fs::exists(kWork / "coarse" / "level1.node"));
  CHECK(fs::exists(kWork / "coarse" / "level2.ele"));
  const Mesh l1 = load_mesh(kWork / "coarse" / "level1");
  const Mesh l2 = load_mesh(kWork / "coarse" / "level2");
  CHECK(l1.num_vertices() < 169);
  CHECK(l2.num_vertices() < l1.num_vertices());
  const std::string report = slurp(kWork / "coarse" / "rounds.txt");
  CHECK(report.find("# level 1") != std::string::npos);
  CHECK(report.find("# round NV NE min_angle_deg") != std::string::npos);
}

TEST_CASE("missing mesh exits with an I/O error naming the path") {
  const auto r = run("coarsen --mesh no_such_mesh --out x");
  CHECK(r.code == 2);
  CHECK(r.err.find("no_such_mesh.node") != std::string::npos);
  const auto s = run("solve --mesh no_such_mesh");
  CHECK(s.code == 2);
}

TEST_CASE("mesh without interior vertices is copied unchanged") {
  write_fixture(unit_square_mesh(), "bare");
  fs::remove_all(kWork / "bare_out");
  const auto r = run("coarsen --mesh bare --rounds 4 --out bare_out");
  CHECK(r.code == 0);
  CHECK(slurp(kWork / "bare_out" / "level1.node") == slurp(kWork / "bare.node"));
  CHECK(slurp(kWork / "bare_out" / "level1.ele") == slurp(kWork / "bare.ele"));
  CHECK(slurp(kWork / "bare_out" / "rounds.txt").find("removed 0") != std::string::npos);
}

TEST_CASE("parameter sweep report") {
  write_fixture(notched_rectangle_mesh(40, 20, 1), "notch");
  const auto r = run("solve --mesh notch --problem convdiff --params 1,10,100 --levels 2 --np 4 --out two.csv");
  REQUIRE(r.code == 0);
  const auto rows = read_csv(kWork / "two.csv");
  REQUIRE(rows.size() == 4);
  CHECK(slurp(kWork / "two.csv").rfind("param,level_count,np,iterations,converged,coarsen_time_s,solve_time_s\n", 0) ==
        0);
  CHECK(rows[1][0] == "1");
  CHECK(rows[3][0] == "100");
  for (int i = 1; i <= 3; ++i) {
    REQUIRE(rows[i].size() == 7);
    CHECK(rows[i][1] == "2");
    CHECK(rows[i][2] == "4");
    CHECK(std::stoi(rows[i][3]) > 0);
    CHECK(rows[i][4] == "1");
  }
  // The hierarchy is built once.
  CHECK(std::stod(rows[1][5]) > 0.0);
  CHECK(std::stod(rows[2][5]) == 0.0);
  CHECK(std::stod(rows[3][5]) == 0.0);

  const auto one = run("solve --mesh notch --params 1,10,100 --levels 1 --np 4 --out one.csv");
  REQUIRE(one.code == 0);
  int it1 = 0, it2 = 0;
  const auto rows1 = read_csv(kWork / "one.csv");
  for (int i = 1; i <= 3; ++i) {
    it1 += std::stoi(rows1[i][3]);
    it2 += std::stoi(rows[i][3]);
  }
  CHECK(it2 < it1);
}

TEST_CASE("repeated runs give identical reports") {
  write_fixture(notched_rectangle_mesh(30, 15, 2), "notch2");
  const std::string args = "solve --mesh notch2 --params 1,100 --levels 3 --np 4 --seed 7 --out ";
  REQUIRE(run(args + "a.csv").code == 0);
  REQUIRE(run(args + "b.csv").code == 0);
  CHECK(without_times(kWork / "a.csv") == without_times(kWork / "b.csv"));
}

TEST_CASE("trivial system converges in one iteration") {
  Mesh m;
  m.vertices = {{0, 0}, {1, 0}, {0, 1}};
  m.elements = {{0, 1, 2}};
  m.boundary_marker = {1, 1, 1};
  write_fixture(m, "one_cell");
  const auto r = run("solve --mesh one_cell --params 1 --np 1 --rtol 1e-12 --out trivial.csv");
  CHECK(r.code == 0);
  const auto rows = read_csv(kWork / "trivial.csv");
  REQUIRE(rows.size() == 2);
  CHECK(rows[1][3] == "1");
}

TEST_CASE("iteration limit exits with code 4") {
  write_fixture(notched_rectangle_mesh(30, 15, 3), "notch3");
  const auto r = run("solve --mesh notch3 --params 100 --np 4 --smooth-its 1 --max-iters 1 --out limit.csv");
  CHECK(r.code == 4);
  const auto rows = read_csv(kWork / "limit.csv");
  REQUIRE(rows.size() == 2);
  CHECK(rows[1][4] == "0");
}

TEST_CASE("invalid settings exit with code 3") {
  write_fixture(notched_rectangle_mesh(10, 5, 0), "small");
  CHECK(run("solve --mesh small --levels 0").code == 3);
  CHECK(run("solve --mesh small --problem heat").code == 3);
  CHECK(run("solve --mesh small --solver cg").code == 3);
  CHECK(run("solve --mesh small --problem stokes --params 0.001").code == 3);  // no inlet/outlet tags
}

TEST_CASE("config file with command-line override") {
  write_fixture(notched_rectangle_mesh(20, 10, 4), "cfgmesh");
  {
    std::ofstream cfg(kWork / "run.cfg");
    cfg << "# sweep settings\n[solve]\nmesh = cfgmesh\nparams = \"1,10\"\nlevels = 2\nnp = 2\nout = from_config.csv\n";
  }
  CHECK(run("solve --config run.cfg").code == 0);
  auto rows = read_csv(kWork / "from_config.csv");
  REQUIRE(rows.size() == 3);
  CHECK(rows[1][1] == "2");
  CHECK(rows[1][2] == "2");
  CHECK(run("solve --config run.cfg --np 3 --out override.csv").code == 0);
  rows = read_csv(kWork / "override.csv");
  REQUIRE(rows.size() == 3);
  CHECK(rows[1][2] == "3");
}

TEST_CASE("Stokes sweep on a pipe") {
  write_fixture(pipe_mesh(4, 0), "pipe");
  const auto r = run("solve --mesh pipe --problem stokes --params 1/500,1/1000 --levels 2 --np 4 --solver ilu0 --out pipe.csv");
  CHECK(r.code == 0);
  const auto rows = read_csv(kWork / "pipe.csv");
  REQUIRE(rows.size() == 3);
  CHECK(std::stod(rows[1][0]) == doctest::Approx(0.002));
}

TEST_CASE("verify suites") {
  const auto a = run("verify --seed 3 --cases 30");
  CHECK(a.code == 0);
  CHECK(a.out.find("mis: 30 passed, 0 failed") != std::string::npos);
  const auto b = run("verify --seed 3 --cases 30");
  CHECK(a.out == b.out);

  // First element has three collinear vertices.
  std::ofstream node(kWork / "corrupt.node");
  node << "4 2 0 1\n0 0 0 1\n1 1 0 1\n2 2 0 1\n3 0 1 1\n";
  std::ofstream ele(kWork / "corrupt.ele");
  ele << "2 3 0\n0 0 1 2\n1 0 1 3\n";
  node.close();
  ele.close();
  CHECK(run("verify --cases 5 --mesh corrupt").code == 3);
}
