#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace schwarz {

using Vector = std::vector<double>;

struct Triplet {
  int row = 0;
  int col = 0;
  double value = 0.0;
};

/// Compressed sparse row matrix; columns strictly increasing within a row.
struct CsrMatrix {
  int nrows = 0;
  int ncols = 0;
  std::vector<int> row_ptr{0};
  std::vector<int> col_idx;
  std::vector<double> values;

  int nnz() const { return static_cast<int>(values.size()); }

  /// Sums duplicates. Explicit zeros are kept so the pattern is stable.
  static CsrMatrix from_triplets(int nrows, int ncols, std::vector<Triplet> triplets);
  static CsrMatrix identity(int n);

  /// Throws ValidationError when a structural invariant is broken.
  void validate() const;

  /// Position of (i, j) in values, or -1 when not stored.
  int find(int i, int j) const;
  double at(int i, int j) const;

  std::vector<double> to_dense() const;  ///< row-major
};

/// y = A x with ascending-column summation per row.
Vector spmv(const CsrMatrix& a, std::span<const double> x);
void spmv(const CsrMatrix& a, std::span<const double> x, std::span<double> y);

/// Rows and columns `index` of A, in the given order.
CsrMatrix extract_submatrix(const CsrMatrix& a, std::span<const int> index);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
double norm_inf(std::span<const double> a);
/// y += alpha x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

struct DenseMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;  ///< row-major

  DenseMatrix() = default;
  DenseMatrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

  double& operator()(int i, int j) { return data[static_cast<std::size_t>(i) * cols + j]; }
  double operator()(int i, int j) const { return data[static_cast<std::size_t>(i) * cols + j]; }

  static DenseMatrix from_csr(const CsrMatrix& a);
};

/// PA = LU with partial pivoting; unit-lower L and U share `lu`.
struct DenseLU {
  int n = 0;
  std::vector<double> lu;
  std::vector<int> perm;
};

/// Throws SingularMatrixError when a pivot is below n * eps * max|A|.
DenseLU lu_factor(const DenseMatrix& a);
Vector lu_solve(const DenseLU& f, std::span<const double> b);

/// Incomplete LU on a level-of-fill pattern. L is unit lower triangular and
/// stored strictly below the diagonal together with U in one CSR matrix.
struct IluFactor {
  CsrMatrix lu;
  std::vector<int> diag;  ///< position of the diagonal entry of each row
  int level = 0;
};

/// ILU(level); level 0 keeps exactly the pattern of A (the pattern must
/// contain the diagonal). Throws SingularMatrixError naming the row of a
/// zero pivot.
IluFactor ilu_factor(const CsrMatrix& a, int level = 0);
inline IluFactor ilu0_factor(const CsrMatrix& a) { return ilu_factor(a, 0); }
Vector ilu_solve(const IluFactor& f, std::span<const double> b);

/// out = Op(in); out is pre-sized by the caller.
using LinearOperator = std::function<void(std::span<const double>, std::span<double>)>;

struct GmresConfig {
  int restart = 50;
  double rtol = 1e-12;
  double atol = 1e-12;
  int max_iters = 2000;
};

void validate_gmres_config(const GmresConfig& cfg);

enum class SolveStatus { converged, max_iters, breakdown };

std::string to_string(SolveStatus s);

struct SolveReport {
  int iterations = 0;
  /// True residual at the start of each cycle, then the Arnoldi estimate
  /// after every iteration of that cycle.
  std::vector<double> residual_history;
  std::vector<int> cycle_starts;  ///< history index where each cycle begins
  bool converged = false;
  SolveStatus status = SolveStatus::max_iters;
  double final_residual = 0.0;  ///< true residual of the returned iterate
};

struct GmresResult {
  Vector x;
  SolveReport report;
};

/// Restarted GMRES, right preconditioned (solves A M^-1 y = b, x = M^-1 y),
/// modified Gram-Schmidt Arnoldi, Givens rotations. Starts from x0 or zero.
GmresResult gmres(const LinearOperator& a, std::span<const double> b, const LinearOperator& precond,
                  const GmresConfig& cfg, std::optional<Vector> x0 = std::nullopt);
GmresResult gmres(const CsrMatrix& a, std::span<const double> b, const LinearOperator& precond,
                  const GmresConfig& cfg, std::optional<Vector> x0 = std::nullopt);

/// "iter,residual" followed by one line per history entry.
void write_history_csv(const SolveReport& report, std::ostream& os);

} // namespace schwarz
