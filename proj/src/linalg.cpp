#include "schwarz/linalg.hpp"

#include "schwarz/error.hpp"
#include "schwarz/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace schwarz {

CsrMatrix CsrMatrix::from_triplets(int nrows, int ncols, std::vector<Triplet> triplets) {
  if (nrows < 0 || ncols < 0) throw DimensionError("negative matrix dimension");
  for (const auto& t : triplets) {
    if (t.row < 0 || t.row >= nrows || t.col < 0 || t.col >= ncols) {
      throw DimensionError("triplet (" + std::to_string(t.row) + ", " + std::to_string(t.col) + ") outside " +
                           std::to_string(nrows) + "x" + std::to_string(ncols));
    }
  }
  std::stable_sort(triplets.begin(), triplets.end(),
                   [](const Triplet& a, const Triplet& b) { return a.row != b.row ? a.row < b.row : a.col < b.col; });
  CsrMatrix m;
  m.nrows = nrows;
  m.ncols = ncols;
  m.row_ptr.assign(nrows + 1, 0);
  for (std::size_t i = 0; i < triplets.size();) {
    const int r = triplets[i].row, c = triplets[i].col;
    double sum = 0.0;
    for (; i < triplets.size() && triplets[i].row == r && triplets[i].col == c; ++i) sum += triplets[i].value;
    m.col_idx.push_back(c);
    m.values.push_back(sum);
    ++m.row_ptr[r + 1];
  }
  for (int r = 0; r < nrows; ++r) m.row_ptr[r + 1] += m.row_ptr[r];
  return m;
}

CsrMatrix CsrMatrix::identity(int n) {
  CsrMatrix m;
  m.nrows = m.ncols = n;
  m.row_ptr.resize(n + 1);
  for (int i = 0; i <= n; ++i) m.row_ptr[i] = i;
  m.col_idx.resize(n);
  for (int i = 0; i < n; ++i) m.col_idx[i] = i;
  m.values.assign(n, 1.0);
  return m;
}

void CsrMatrix::validate() const {
  if (static_cast<int>(row_ptr.size()) != nrows + 1 || row_ptr.front() != 0) {
    throw ValidationError("row_ptr has the wrong length or start");
  }
  for (int i = 0; i < nrows; ++i) {
    if (row_ptr[i + 1] < row_ptr[i]) throw ValidationError("row_ptr decreases at row " + std::to_string(i));
    for (int p = row_ptr[i]; p < row_ptr[i + 1]; ++p) {
      if (col_idx[p] < 0 || col_idx[p] >= ncols) throw ValidationError("column out of range in row " + std::to_string(i));
      if (p > row_ptr[i] && col_idx[p] <= col_idx[p - 1]) {
        throw ValidationError("columns not strictly increasing in row " + std::to_string(i));
      }
    }
  }
  if (values.size() != static_cast<std::size_t>(row_ptr.back()) || col_idx.size() != values.size()) {
    throw ValidationError("value count does not match row_ptr");
  }
}

int CsrMatrix::find(int i, int j) const {
  const auto begin = col_idx.begin() + row_ptr[i], end = col_idx.begin() + row_ptr[i + 1];
  const auto it = std::lower_bound(begin, end, j);
  return (it != end && *it == j) ? static_cast<int>(it - col_idx.begin()) : -1;
}

double CsrMatrix::at(int i, int j) const {
  const int p = find(i, j);
  return p < 0 ? 0.0 : values[p];
}

std::vector<double> CsrMatrix::to_dense() const {
  std::vector<double> d(static_cast<std::size_t>(nrows) * ncols, 0.0);
  for (int i = 0; i < nrows; ++i)
    for (int p = row_ptr[i]; p < row_ptr[i + 1]; ++p) d[static_cast<std::size_t>(i) * ncols + col_idx[p]] = values[p];
  return d;
}

void spmv(const CsrMatrix& a, std::span<const double> x, std::span<double> y) {
  if (static_cast<int>(x.size()) != a.ncols || static_cast<int>(y.size()) != a.nrows) {
    throw DimensionError("spmv: matrix is " + std::to_string(a.nrows) + "x" + std::to_string(a.ncols) +
                         ", x has " + std::to_string(x.size()) + ", y has " + std::to_string(y.size()));
  }
  constexpr int block = 2048;
  const int nblocks = (a.nrows + block - 1) / block;
  parallel_for(static_cast<std::size_t>(nblocks), [&](std::size_t b) {
    const int r0 = static_cast<int>(b) * block, r1 = std::min(a.nrows, r0 + block);
    for (int i = r0; i < r1; ++i) {
      double s = 0.0;
      for (int p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p) s += a.values[p] * x[a.col_idx[p]];
      y[i] = s;
    }
  });
}

Vector spmv(const CsrMatrix& a, std::span<const double> x) {
  Vector y(a.nrows, 0.0);
  spmv(a, x, y);
  return y;
}

CsrMatrix extract_submatrix(const CsrMatrix& a, std::span<const int> index) {
  std::vector<int> local(a.ncols, -1);
  for (std::size_t k = 0; k < index.size(); ++k) local[index[k]] = static_cast<int>(k);
  const int n = static_cast<int>(index.size());
  CsrMatrix m;
  m.nrows = m.ncols = n;
  m.row_ptr.assign(n + 1, 0);
  std::vector<std::pair<int, double>> row;
  for (int k = 0; k < n; ++k) {
    const int i = index[k];
    row.clear();
    for (int p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p) {
      const int j = local[a.col_idx[p]];
      if (j >= 0) row.push_back({j, a.values[p]});
    }
    std::sort(row.begin(), row.end());
    for (const auto& [j, v] : row) {
      m.col_idx.push_back(j);
      m.values.push_back(v);
    }
    m.row_ptr[k + 1] = static_cast<int>(m.values.size());
  }
  return m;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double norm_inf(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) throw DimensionError("axpy: length mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

DenseMatrix DenseMatrix::from_csr(const CsrMatrix& a) {
  DenseMatrix d(a.nrows, a.ncols);
  d.data = a.to_dense();
  return d;
}

DenseLU lu_factor(const DenseMatrix& a) {
  if (a.rows != a.cols) throw DimensionError("lu_factor needs a square matrix");
  const int n = a.rows;
  DenseLU f;
  f.n = n;
  f.lu = a.data;
  f.perm.resize(n);
  for (int i = 0; i < n; ++i) f.perm[i] = i;
  double scale = 0.0;
  for (double v : a.data) scale = std::max(scale, std::abs(v));
  const double tol = std::max(1, n) * std::numeric_limits<double>::epsilon() * scale;
  auto at = [&](int i, int j) -> double& { return f.lu[static_cast<std::size_t>(i) * n + j]; };

  for (int k = 0; k < n; ++k) {
    int piv = k;
    for (int i = k + 1; i < n; ++i)
      if (std::abs(at(i, k)) > std::abs(at(piv, k))) piv = i;
    if (!(std::abs(at(piv, k)) > tol)) {
      throw SingularMatrixError("singular matrix: pivot " + std::to_string(k) + " below tolerance");
    }
    if (piv != k) {
      std::swap_ranges(f.lu.begin() + static_cast<std::ptrdiff_t>(k) * n, f.lu.begin() + static_cast<std::ptrdiff_t>(k + 1) * n,
                       f.lu.begin() + static_cast<std::ptrdiff_t>(piv) * n);
      std::swap(f.perm[k], f.perm[piv]);
    }
    const double inv = 1.0 / at(k, k);
    for (int i = k + 1; i < n; ++i) {
      const double l = at(i, k) * inv;
      at(i, k) = l;
      if (l == 0.0) continue;
      for (int j = k + 1; j < n; ++j) at(i, j) -= l * at(k, j);
    }
  }
  return f;
}

Vector lu_solve(const DenseLU& f, std::span<const double> b) {
  const int n = f.n;
  if (static_cast<int>(b.size()) != n) throw DimensionError("lu_solve: right-hand side length mismatch");
  Vector x(n);
  for (int i = 0; i < n; ++i) x[i] = b[f.perm[i]];
  for (int i = 0; i < n; ++i) {
    const double* row = f.lu.data() + static_cast<std::size_t>(i) * n;
    double s = x[i];
    for (int j = 0; j < i; ++j) s -= row[j] * x[j];
    x[i] = s;
  }
  for (int i = n - 1; i >= 0; --i) {
    const double* row = f.lu.data() + static_cast<std::size_t>(i) * n;
    double s = x[i];
    for (int j = i + 1; j < n; ++j) s -= row[j] * x[j];
    x[i] = s / row[i];
  }
  return x;
}

namespace {

/// Symbolic ILU(level): for each row the sorted columns whose fill level
/// does not exceed `level`.
std::vector<std::vector<int>> ilu_pattern(const CsrMatrix& a, int level) {
  const int n = a.nrows;
  std::vector<std::vector<int>> cols(n), levs(n);
  std::vector<int> lev_of(n, std::numeric_limits<int>::max());
  std::vector<int> row;
  for (int i = 0; i < n; ++i) {
    row.clear();
    for (int p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p) {
      row.push_back(a.col_idx[p]);
      lev_of[a.col_idx[p]] = 0;
    }
    // Eliminate in ascending column order; fill may insert new k < i.
    for (std::size_t q = 0; q < row.size(); ++q) {
      std::sort(row.begin() + static_cast<std::ptrdiff_t>(q), row.end());
      const int k = row[q];
      if (k >= i) break;
      const int lik = lev_of[k];
      for (std::size_t t = 0; t < cols[k].size(); ++t) {
        const int j = cols[k][t];
        if (j <= k) continue;
        const int l = lik + levs[k][t] + 1;
        if (l > level) continue;
        if (lev_of[j] == std::numeric_limits<int>::max()) {
          lev_of[j] = l;
          row.push_back(j);
        } else {
          lev_of[j] = std::min(lev_of[j], l);
        }
      }
    }
    std::sort(row.begin(), row.end());
    cols[i] = row;
    levs[i].resize(row.size());
    for (std::size_t t = 0; t < row.size(); ++t) {
      levs[i][t] = lev_of[row[t]];
      lev_of[row[t]] = std::numeric_limits<int>::max();
    }
  }
  return cols;
}

} // namespace

IluFactor ilu_factor(const CsrMatrix& a, int level) {
  if (a.nrows != a.ncols) throw DimensionError("ILU needs a square matrix");
  if (level < 0) throw ValidationError("ILU level must be non-negative");
  const int n = a.nrows;
  IluFactor f;
  f.level = level;
  CsrMatrix& m = f.lu;
  m.nrows = m.ncols = n;
  if (level == 0) {
    m.row_ptr = a.row_ptr;
    m.col_idx = a.col_idx;
  } else {
    const auto pattern = ilu_pattern(a, level);
    m.row_ptr.assign(n + 1, 0);
    for (int i = 0; i < n; ++i) {
      m.col_idx.insert(m.col_idx.end(), pattern[i].begin(), pattern[i].end());
      m.row_ptr[i + 1] = static_cast<int>(m.col_idx.size());
    }
  }
  m.values.assign(m.col_idx.size(), 0.0);
  f.diag.assign(n, -1);
  for (int i = 0; i < n; ++i) {
    for (int p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p) m.values[m.find(i, a.col_idx[p])] = a.values[p];
    f.diag[i] = m.find(i, i);
    if (f.diag[i] < 0) throw SingularMatrixError("ILU: row " + std::to_string(i) + " has no diagonal entry");
  }

  std::vector<int> pos(n, -1);
  for (int i = 0; i < n; ++i) {
    for (int p = m.row_ptr[i]; p < m.row_ptr[i + 1]; ++p) pos[m.col_idx[p]] = p;
    for (int p = m.row_ptr[i]; p < f.diag[i]; ++p) {
      const int k = m.col_idx[p];
      const double lik = m.values[p] / m.values[f.diag[k]];
      m.values[p] = lik;
      for (int q = f.diag[k] + 1; q < m.row_ptr[k + 1]; ++q) {
        const int target = pos[m.col_idx[q]];
        if (target >= 0) m.values[target] -= lik * m.values[q];
      }
    }
    for (int p = m.row_ptr[i]; p < m.row_ptr[i + 1]; ++p) pos[m.col_idx[p]] = -1;
    const double pivot = m.values[f.diag[i]];
    if (pivot == 0.0 || !std::isfinite(pivot)) {
      throw SingularMatrixError("ILU: zero pivot in row " + std::to_string(i));
    }
  }
  return f;
}

Vector ilu_solve(const IluFactor& f, std::span<const double> b) {
  const CsrMatrix& m = f.lu;
  if (static_cast<int>(b.size()) != m.nrows) throw DimensionError("ilu_solve: right-hand side length mismatch");
  Vector x(b.begin(), b.end());
  for (int i = 0; i < m.nrows; ++i) {
    double s = x[i];
    for (int p = m.row_ptr[i]; p < f.diag[i]; ++p) s -= m.values[p] * x[m.col_idx[p]];
    x[i] = s;
  }
  for (int i = m.nrows - 1; i >= 0; --i) {
    double s = x[i];
    for (int p = f.diag[i] + 1; p < m.row_ptr[i + 1]; ++p) s -= m.values[p] * x[m.col_idx[p]];
    x[i] = s / m.values[f.diag[i]];
  }
  return x;
}

void validate_gmres_config(const GmresConfig& cfg) {
  if (cfg.restart < 1) throw ValidationError("GMRES restart must be at least 1");
  if (!(cfg.rtol > 0.0) || !(cfg.atol > 0.0)) throw ValidationError("GMRES tolerances must be positive");
  if (cfg.max_iters < 1) throw ValidationError("GMRES max_iters must be at least 1");
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::max_iters: return "max_iters";
    case SolveStatus::breakdown: return "breakdown";
  }
  return "unknown";
}

GmresResult gmres(const LinearOperator& a, std::span<const double> b, const LinearOperator& precond,
                  const GmresConfig& cfg, std::optional<Vector> x0) {
  validate_gmres_config(cfg);
  const std::size_t n = b.size();
  GmresResult out;
  out.x = x0 ? std::move(*x0) : Vector(n, 0.0);
  if (out.x.size() != n) throw DimensionError("gmres: initial guess length mismatch");
  SolveReport& rep = out.report;
  const double tol = std::max(cfg.rtol * norm2(b), cfg.atol);
  const int m = cfg.restart;

  auto apply_m = [&](std::span<const double> in, std::span<double> res) {
    if (precond) {
      precond(in, res);
    } else {
      std::copy(in.begin(), in.end(), res.begin());
    }
  };

  Vector r(n), w(n), z(n);
  std::vector<Vector> v(m + 1, Vector(n));
  std::vector<double> h(static_cast<std::size_t>(m + 1) * m, 0.0);
  auto H = [&](int i, int j) -> double& { return h[static_cast<std::size_t>(i) * m + j]; };
  std::vector<double> cs(m), sn(m), g(m + 1);

  auto true_residual = [&] {
    a(out.x, r);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
    return norm2(r);
  };

  while (true) {
    const double beta = true_residual();
    rep.cycle_starts.push_back(static_cast<int>(rep.residual_history.size()));
    rep.residual_history.push_back(beta);
    rep.final_residual = beta;
    if (beta <= tol) {
      rep.converged = true;
      rep.status = SolveStatus::converged;
      return out;
    }
    if (rep.iterations >= cfg.max_iters) {
      rep.status = SolveStatus::max_iters;
      return out;
    }
    for (std::size_t i = 0; i < n; ++i) v[0][i] = r[i] / beta;
    std::fill(g.begin(), g.end(), 0.0);
    g[0] = beta;

    int k = 0;
    bool broke = false;
    while (k < m && rep.iterations < cfg.max_iters) {
      apply_m(v[k], z);
      a(z, w);
      const double wnorm = norm2(w);
      for (int i = 0; i <= k; ++i) {
        H(i, k) = dot(w, v[i]);
        axpy(-H(i, k), v[i], w);
      }
      const double hk = norm2(w);
      H(k + 1, k) = hk;
      broke = !(hk > 1e-14 * wnorm);
      if (!broke) {
        for (std::size_t i = 0; i < n; ++i) v[k + 1][i] = w[i] / hk;
      }
      for (int i = 0; i < k; ++i) {
        const double t = cs[i] * H(i, k) + sn[i] * H(i + 1, k);
        H(i + 1, k) = -sn[i] * H(i, k) + cs[i] * H(i + 1, k);
        H(i, k) = t;
      }
      const double denom = std::hypot(H(k, k), H(k + 1, k));
      cs[k] = denom == 0.0 ? 1.0 : H(k, k) / denom;
      sn[k] = denom == 0.0 ? 0.0 : H(k + 1, k) / denom;
      H(k, k) = denom;
      H(k + 1, k) = 0.0;
      g[k + 1] = -sn[k] * g[k];
      g[k] = cs[k] * g[k];
      ++k;
      ++rep.iterations;
      const double estimate = std::abs(g[k]);
      rep.residual_history.push_back(estimate);
      if (estimate <= tol || broke) break;
    }

    // Solve the k x k triangular system and update x += M^-1 V y.
    std::vector<double> y(k, 0.0);
    for (int i = k - 1; i >= 0; --i) {
      double s = g[i];
      for (int j = i + 1; j < k; ++j) s -= H(i, j) * y[j];
      y[i] = H(i, i) == 0.0 ? 0.0 : s / H(i, i);
    }
    std::fill(w.begin(), w.end(), 0.0);
    for (int j = 0; j < k; ++j) axpy(y[j], v[j], w);
    apply_m(w, z);
    axpy(1.0, z, out.x);

    if (broke) {
      const double res = true_residual();
      rep.final_residual = res;
      if (res <= tol) {
        rep.cycle_starts.push_back(static_cast<int>(rep.residual_history.size()));
        rep.residual_history.push_back(res);
        rep.converged = true;
        rep.status = SolveStatus::converged;
      } else {
        rep.status = SolveStatus::breakdown;
      }
      return out;
    }
  }
}

GmresResult gmres(const CsrMatrix& a, std::span<const double> b, const LinearOperator& precond,
                  const GmresConfig& cfg, std::optional<Vector> x0) {
  if (a.nrows != a.ncols || static_cast<std::size_t>(a.nrows) != b.size()) {
    throw DimensionError("gmres: matrix and right-hand side sizes differ");
  }
  return gmres([&a](std::span<const double> x, std::span<double> y) { spmv(a, x, y); }, b, precond, cfg,
               std::move(x0));
}

void write_history_csv(const SolveReport& report, std::ostream& os) {
  os << "iter,residual\n";
  os.precision(17);
  for (std::size_t i = 0; i < report.residual_history.size(); ++i) os << i << ',' << report.residual_history[i] << '\n';
}

} // namespace schwarz
