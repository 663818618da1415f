#include "schwarz/run.hpp"

#include "schwarz/error.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <ostream>

namespace schwarz {

void validate_run_config(const RunConfig& cfg) {
  if (cfg.problem != "convdiff" && cfg.problem != "stokes") {
    throw ValidationError("unknown problem '" + cfg.problem + "' (expected convdiff or stokes)");
  }
  if (cfg.params.empty()) throw ValidationError("parameter list is empty");
  for (double p : cfg.params)
    if (!std::isfinite(p)) throw ValidationError("parameters must be finite");
  if (cfg.problem == "stokes")
    for (double p : cfg.params)
      if (!(p > 0.0)) throw ValidationError("viscosity must be positive");
  if (cfg.levels < 1) throw ValidationError("levels must be at least 1");
  if (cfg.np < 1) throw ValidationError("np must be at least 1");
  if (cfg.delta < 0) throw ValidationError("overlap must be non-negative");
  if (cfg.its < 0) throw ValidationError("smoothing steps must be non-negative");
  if (cfg.rounds < 1) throw ValidationError("coarsening rounds must be at least 1");
  validate_gmres_config(cfg.gmres);
  if (!cfg.mesh.empty()) {
    for (const char* ext : {".node", ".ele"}) {
      const std::string path = cfg.mesh + ext;
      if (!std::filesystem::exists(path)) throw ParseError("cannot open " + path);
    }
  }
}

namespace {

double parse_number(const std::string& s) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  while (first < last && *first == ' ') ++first;
  while (last > first && last[-1] == ' ') --last;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || first == last) throw ValidationError("bad number '" + s + "'");
  return v;
}

} // namespace

std::vector<double> parse_param_list(const std::string& text) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find(',', start), text.size());
    const std::string item = text.substr(start, end - start);
    const std::size_t slash = item.find('/');
    if (slash == std::string::npos) {
      out.push_back(parse_number(item));
    } else {
      const double den = parse_number(item.substr(slash + 1));
      if (den == 0.0) throw ValidationError("zero denominator in '" + item + "'");
      out.push_back(parse_number(item.substr(0, slash)) / den);
    }
    start = end + 1;
  }
  return out;
}

Discretization make_problem(const std::string& problem, double param) {
  if (problem == "convdiff") return convdiff_problem({param, {1.0, 0.0}, 1.0});
  if (problem == "stokes") {
    StokesParams p;
    p.nu = param;
    return stokes_problem(p);
  }
  throw ValidationError("unknown problem '" + problem + "'");
}

bool RunReport::all_converged() const {
  for (const auto& c : cases)
    if (!c.solve.converged) return false;
  return true;
}

RunReport run_solve(const RunConfig& cfg, const Mesh& mesh) {
  validate_run_config(cfg);
  HierarchyConfig hc;
  hc.levels = cfg.levels;
  hc.np = cfg.np;
  hc.delta = cfg.delta;
  hc.its = cfg.its;
  hc.solver = cfg.solver;
  hc.ilu_level = cfg.ilu_level;
  hc.seed = cfg.seed;
  hc.coarsen.max_rounds = cfg.rounds;
  hc.coarsen.seed = cfg.seed;

  RunReport report;
  report.levels = cfg.levels;
  report.np = cfg.np;
  Hierarchy h;
  for (std::size_t k = 0; k < cfg.params.size(); ++k) {
    const Discretization problem = make_problem(cfg.problem, cfg.params[k]);
    CaseReport c;
    c.param = cfg.params[k];
    const auto t0 = std::chrono::steady_clock::now();
    if (k == 0) {
      h = build_hierarchy(mesh, problem, hc);
      c.coarsen_time_s = h.coarsen_time_s + h.transfer_time_s;
      report.hierarchy = format_hierarchy(h);
    } else {
      assemble_operators(h, problem);
    }
    const LinearSystem sys = problem.assemble(mesh);
    const auto result = gmres(
        h.levels[0].J, sys.b,
        [&](std::span<const double> in, std::span<double> out) {
          const Vector z = apply_vcycle(h, in);
          std::copy(z.begin(), z.end(), out.begin());
        },
        cfg.gmres);
    const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    c.solve_time_s = total - c.coarsen_time_s;
    c.solve = result.report;
    report.cases.push_back(std::move(c));
  }
  return report;
}

namespace {

std::string shortest(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc() ? std::string(buf, ptr) : std::to_string(v);
}

std::string fixed(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 6);
  return ec == std::errc() ? std::string(buf, ptr) : std::to_string(v);
}

} // namespace

void write_report_csv(const RunReport& report, std::ostream& os) {
  os << kReportHeader << '\n';
  for (const auto& c : report.cases) {
    os << shortest(c.param) << ',' << report.levels << ',' << report.np << ',' << c.solve.iterations << ','
       << (c.solve.converged ? 1 : 0) << ',' << fixed(c.coarsen_time_s) << ',' << fixed(c.solve_time_s) << '\n';
  }
}

} // namespace schwarz
