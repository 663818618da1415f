#pragma once

#include "schwarz/mesh.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace schwarz {

struct SuiteResult {
  std::string name;
  int passed = 0;
  int failed = 0;
  std::vector<std::string> failures;  ///< "case: what went wrong"

  bool ok() const { return failed == 0; }
};

/// Random graphs (at most 500 vertices, some vertices marked boundary):
/// the computed set is checked for independence and maximality against an
/// adjacency matrix.
SuiteResult verify_mis(int cases, std::uint64_t seed);

/// Random meshes paired with one coarsening sweep (M rounds) of themselves,
/// plus `extra` when given. Every transfer row must sum to 1 and reproduce
/// random affine fields, both within `tol` relative.
SuiteResult verify_mls(int cases, std::uint64_t seed, double tol = 1e-9, const Mesh* extra = nullptr);

/// Random fit sites: the moment matrix is symmetric positive definite, the
/// loss satisfies sampled convexity, and collinear stencils are grown
/// rather than fitted.
SuiteResult verify_fits(int cases, std::uint64_t seed);

/// Small convection-diffusion and Stokes systems (at most 200 unknowns) for
/// np in {1, 2, 4} and overlap in {0, 1, 2}: apply_ras must match the
/// dense sum of (R0_p)^T (J_p)^-1 R_p within `tol`.
SuiteResult verify_ras(int cases, std::uint64_t seed, double tol = 1e-10);

std::string format_suite(const SuiteResult& r);

} // namespace schwarz
