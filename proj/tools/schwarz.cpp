// Command-line driver: coarsen meshes, run parameter sweeps, run the
// property suites, and write fixture meshes.

#include "schwarz/coarsen.hpp"
#include "schwarz/error.hpp"
#include "schwarz/fixtures.hpp"
#include "schwarz/random.hpp"
#include "schwarz/run.hpp"
#include "schwarz/verify.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>

namespace fs = std::filesystem;
using namespace schwarz;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kIo = 2, kInvalid = 3, kNotConverged = 4, kSuiteFailed = 5 };

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
}

struct CoarsenArgs {
  std::string mesh, out = ".";
  int rounds = 4, np = 1, levels = 2;
  std::uint64_t seed = 0;
};

int cmd_coarsen(const CoarsenArgs& a) {
  if (a.levels < 2) throw ValidationError("levels must be at least 2");
  if (a.rounds < 1) throw ValidationError("rounds must be at least 1");
  Mesh mesh = load_mesh(a.mesh);
  fs::create_directories(a.out);
  Partition part = extend_overlap(mesh, partition_mesh(mesh, std::min(a.np, mesh.num_elements()), a.seed), 1);
  std::string report;
  for (int level = 1; level < a.levels; ++level) {
    CoarsenConfig cfg;
    cfg.max_rounds = a.rounds;
    cfg.seed = hash_combine(a.seed, static_cast<std::uint64_t>(level));
    CoarsenResult r = coarsen(mesh, part, cfg);
    const fs::path base = fs::path(a.out) / ("level" + std::to_string(level));
    save_mesh(r.mesh, base);
    int removed = 0;
    for (const auto& s : r.rounds) removed += s.removed;
    report += "# level " + std::to_string(level) + " removed " + std::to_string(removed) + "\n";
    report += format_round_stats(r.rounds);
    std::cout << "level " << level << ": NV " << r.mesh.num_vertices() << ", NE " << r.mesh.num_elements()
              << ", removed " << removed << " -> " << base.string() << ".{node,ele}\n";
    mesh = std::move(r.mesh);
    part = std::move(r.partition);
  }
  const fs::path report_path = fs::path(a.out) / "rounds.txt";
  std::ofstream os(report_path);
  if (!os) throw ParseError("cannot write " + report_path.string());
  os << report;
  std::cout << report;
  return kOk;
}

struct SolveArgs {
  RunConfig cfg;
  std::string params = "1,10,100";
  std::string solver = "lu";
};

int cmd_solve(SolveArgs& a) {
  a.cfg.params = parse_param_list(a.params);
  a.cfg.solver = parse_local_solver(a.solver, &a.cfg.ilu_level);
  validate_run_config(a.cfg);
  const Mesh mesh = load_mesh(a.cfg.mesh);
  const RunReport report = run_solve(a.cfg, mesh);
  std::cout << report.hierarchy;
  for (const auto& c : report.cases) {
    std::cout << "param " << c.param << ": " << c.solve.iterations << " iterations, " << to_string(c.solve.status)
              << ", residual " << c.solve.final_residual << '\n';
  }
  if (!a.cfg.out.empty()) {
    std::ofstream os(a.cfg.out);
    if (!os) throw ParseError("cannot write " + a.cfg.out);
    write_report_csv(report, os);
  } else {
    write_report_csv(report, std::cout);
  }
  return report.all_converged() ? kOk : kNotConverged;
}

struct VerifyArgs {
  std::uint64_t seed = 0;
  int cases = 100;
  std::string mesh;
};

int cmd_verify(const VerifyArgs& a) {
  if (a.cases < 1) throw ValidationError("cases must be positive");
  std::optional<Mesh> extra;
  if (!a.mesh.empty()) extra = load_mesh(a.mesh);
  const std::vector<SuiteResult> suites{
      verify_mis(a.cases, a.seed),
      verify_fits(a.cases, a.seed),
      verify_mls(std::max(1, a.cases / 2), a.seed, 1e-9, extra ? &*extra : nullptr),
      verify_ras(std::max(1, a.cases / 10), a.seed),
  };
  bool ok = true;
  for (const auto& s : suites) {
    std::cout << format_suite(s) << '\n';
    ok = ok && s.ok();
  }
  if (ok) return kOk;
  std::cerr << "failed properties:\n";
  for (const auto& s : suites)
    for (const auto& f : s.failures) std::cerr << "  " << s.name << " " << f << '\n';
  return kSuiteFailed;
}

struct GenerateArgs {
  std::string kind = "square", out;
  int nx = 16, ny = 16;
  double jitter = 0.2;
  std::uint64_t seed = 0;
};

int cmd_generate(const GenerateArgs& a) {
  Mesh m;
  if (a.kind == "square") {
    GridMeshSpec spec;
    spec.nx = a.nx;
    spec.ny = a.ny;
    spec.jitter = a.jitter;
    spec.random_diagonals = a.jitter > 0;
    spec.seed = a.seed;
    m = grid_mesh(spec);
  } else if (a.kind == "notched") {
    m = notched_rectangle_mesh(a.nx, a.ny, a.seed);
  } else if (a.kind == "channel") {
    m = channel_mesh(2.0, a.nx, a.ny, a.jitter, a.seed);
  } else if (a.kind == "pipe") {
    m = pipe_mesh(a.nx, a.seed);
  } else {
    throw ValidationError("unknown mesh kind '" + a.kind + "'");
  }
  save_mesh(m, a.out);
  std::cout << a.out << ": NV " << m.num_vertices() << ", NE " << m.num_elements() << '\n';
  return kOk;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Non-nested multilevel Schwarz preconditioning on unstructured triangle meshes"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "Config file (key = value; solve keys under [solve]); flags take precedence");

  CoarsenArgs ca;
  auto* coarsen_cmd = app.add_subcommand("coarsen", "Build coarse meshes and write round statistics");
  coarsen_cmd->add_option("--mesh", ca.mesh, "Mesh base path (<base>.node, <base>.ele)")->required();
  coarsen_cmd->add_option("--rounds", ca.rounds, "Removal rounds per level")->capture_default_str();
  coarsen_cmd->add_option("--np", ca.np, "Subdomains")->capture_default_str();
  coarsen_cmd->add_option("--levels", ca.levels, "Levels including the input")->capture_default_str();
  coarsen_cmd->add_option("--seed", ca.seed, "Random seed")->capture_default_str();
  coarsen_cmd->add_option("--out", ca.out, "Output directory")->capture_default_str();

  SolveArgs sa;
  auto* solve_cmd = app.add_subcommand("solve", "Solve a parameter sweep with a shared hierarchy");
  solve_cmd->add_option("--mesh", sa.cfg.mesh, "Mesh base path")->required();
  solve_cmd->add_option("--problem", sa.cfg.problem, "convdiff or stokes")->capture_default_str();
  solve_cmd->add_option("--params", sa.params, "Comma-separated beta or nu values; a/b allowed")->capture_default_str();
  solve_cmd->add_option("--levels", sa.cfg.levels, "Hierarchy levels")->capture_default_str();
  solve_cmd->add_option("--np", sa.cfg.np, "Subdomains")->capture_default_str();
  solve_cmd->add_option("--overlap", sa.cfg.delta, "Overlap layers")->capture_default_str();
  solve_cmd->add_option("--smooth-its", sa.cfg.its, "Pre- and post-smoothing steps")->capture_default_str();
  solve_cmd->add_option("--rounds", sa.cfg.rounds, "Coarsening rounds per level")->capture_default_str();
  solve_cmd->add_option("--restart", sa.cfg.gmres.restart, "GMRES restart")->capture_default_str();
  solve_cmd->add_option("--rtol", sa.cfg.gmres.rtol, "Relative tolerance")->capture_default_str();
  solve_cmd->add_option("--atol", sa.cfg.gmres.atol, "Absolute tolerance")->capture_default_str();
  solve_cmd->add_option("--max-iters", sa.cfg.gmres.max_iters, "Iteration limit")->capture_default_str();
  solve_cmd->add_option("--solver", sa.solver, "Subdomain solver: lu, ilu0, ilu1, ...")->capture_default_str();
  solve_cmd->add_option("--seed", sa.cfg.seed, "Random seed")->capture_default_str();
  solve_cmd->add_option("--out", sa.cfg.out, "Report CSV path (stdout when empty)");

  VerifyArgs va;
  auto* verify_cmd = app.add_subcommand("verify", "Run the property suites");
  verify_cmd->add_option("--seed", va.seed, "Random seed")->capture_default_str();
  verify_cmd->add_option("--cases", va.cases, "Cases per suite")->capture_default_str();
  verify_cmd->add_option("--mesh", va.mesh, "Extra fixture mesh base path");

  GenerateArgs ga;
  auto* gen_cmd = app.add_subcommand("generate", "Write a fixture mesh");
  gen_cmd->add_option("--kind", ga.kind, "square, notched, channel or pipe")->capture_default_str();
  gen_cmd->add_option("--nx", ga.nx, "Cells in x (pipe: cells per unit length)")->capture_default_str();
  gen_cmd->add_option("--ny", ga.ny, "Cells in y")->capture_default_str();
  gen_cmd->add_option("--jitter", ga.jitter, "Interior vertex jitter")->capture_default_str();
  gen_cmd->add_option("--seed", ga.seed, "Random seed")->capture_default_str();
  gen_cmd->add_option("--out", ga.out, "Output base path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  if (coarsen_cmd->parsed()) return guarded([&] { return cmd_coarsen(ca); });
  if (solve_cmd->parsed()) return guarded([&] { return cmd_solve(sa); });
  if (verify_cmd->parsed()) return guarded([&] { return cmd_verify(va); });
  return guarded([&] { return cmd_generate(ga); });
}
