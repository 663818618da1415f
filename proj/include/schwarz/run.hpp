#pragma once

#include "schwarz/linalg.hpp"
#include "schwarz/schwarz.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace schwarz {

struct RunConfig {
  std::string mesh;  ///< base path of the .node/.ele pair
  std::string problem = "convdiff";
  std::vector<double> params;  ///< beta values (convdiff) or viscosities (stokes)
  int levels = 1;
  int np = 4;
  int delta = 1;
  int its = 3;
  int rounds = 4;
  LocalSolver solver = LocalSolver::lu;
  int ilu_level = 0;
  GmresConfig gmres;
  std::uint64_t seed = 0;
  std::string out;
};

/// Throws ValidationError for a bad value, ParseError for a missing mesh file.
void validate_run_config(const RunConfig& cfg);

/// Comma-separated numbers; "a/b" fractions are allowed ("1/500").
std::vector<double> parse_param_list(const std::string& text);

/// Convection-diffusion takes beta, Stokes the viscosity.
Discretization make_problem(const std::string& problem, double param);

struct CaseReport {
  double param = 0.0;
  SolveReport solve;
  double coarsen_time_s = 0.0;  ///< hierarchy construction; nonzero on the first case only
  double solve_time_s = 0.0;
};

struct RunReport {
  int levels = 1;
  int np = 1;
  std::vector<CaseReport> cases;
  std::string hierarchy;  ///< format_hierarchy of the first case

  bool all_converged() const;
};

/// Builds the hierarchy once on `mesh`, then for each parameter
/// re-discretizes, refactors the smoothers and runs GMRES preconditioned by
/// one V-cycle.
RunReport run_solve(const RunConfig& cfg, const Mesh& mesh);

inline constexpr const char* kReportHeader = "param,level_count,np,iterations,converged,coarsen_time_s,solve_time_s";

void write_report_csv(const RunReport& report, std::ostream& os);

} // namespace schwarz
