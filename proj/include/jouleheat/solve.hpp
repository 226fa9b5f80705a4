#ifndef JOULEHEAT_SOLVE_HPP
#define JOULEHEAT_SOLVE_HPP

#include <cmath>
#include <string>
#include <vector>

#include "jouleheat/sparse.hpp"

namespace jouleheat {

enum class Preconditioner { none, jacobi };

struct SolverConfig {
  double rel_tol = 1e-10;
  double abs_tol = 1e-14;
  int max_iterations = 0;  // 0 -> 10 * n
  Preconditioner preconditioner = Preconditioner::jacobi;
};

struct SolveResult {
  std::vector<double> x;
  int iterations = 0;
  double residual = 0.0;
};

/// Preconditioned conjugate gradients for SPD systems. The postcondition is
/// ||Ax-b|| <= max(rel_tol*||b||, abs_tol) on the true residual; throws
/// SolverError on NaN breakdown or when the iteration cap is reached.
inline SolveResult cg_solve(const SparseMatrix& A, const std::vector<double>& b,
                            const SolverConfig& config = {},
                            const std::vector<double>* x0 = nullptr) {
  const int n = A.rows();
  if (static_cast<int>(b.size()) != n) throw SolverError("cg_solve: dimension mismatch");
  const int max_iter = config.max_iterations > 0 ? config.max_iterations : 10 * n;
  const double target = std::max(config.rel_tol * norm2(b), config.abs_tol);

  SolveResult result;
  result.x.assign(n, 0.0);
  if (x0) result.x = *x0;

  std::vector<double> r = b;
  if (x0) {
    auto Ax = A.multiply(result.x);
    for (int i = 0; i < n; ++i) r[i] -= Ax[i];
  }
  if (norm2(r) <= target) {
    result.residual = norm2(r);
    return result;
  }

  std::vector<double> inv_diag(n, 1.0);
  if (config.preconditioner == Preconditioner::jacobi) {
    auto d = A.diagonal();
    for (int i = 0; i < n; ++i) {
      if (d[i] <= 0.0) throw SolverError("cg_solve: non-positive diagonal entry");
      inv_diag[i] = 1.0 / d[i];
    }
  }
  auto precondition = [&](const std::vector<double>& v) {
    std::vector<double> z(n);
    for (int i = 0; i < n; ++i) z[i] = inv_diag[i] * v[i];
    return z;
  };

  std::vector<double> z = precondition(r);
  std::vector<double> p = z;
  double rz = dot(r, z);

  for (int it = 1; it <= max_iter; ++it) {
    auto Ap = A.multiply(p);
    double pAp = dot(p, Ap);
    if (!std::isfinite(pAp) || pAp <= 0.0)
      throw SolverError("cg_solve: breakdown (matrix not SPD or NaN)");
    double alpha = rz / pAp;
    axpy(alpha, p, result.x);
    axpy(-alpha, Ap, r);
    double rn = norm2(r);
    if (!std::isfinite(rn)) throw SolverError("cg_solve: NaN residual");
    if (rn <= target) {
      result.iterations = it;
      result.residual = rn;
      return result;
    }
    z = precondition(r);
    double rz_new = dot(r, z);
    double beta = rz_new / rz;
    rz = rz_new;
    for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  throw SolverError("cg_solve: no convergence in " + std::to_string(max_iter) +
                    " iterations, residual " + std::to_string(norm2(r)));
}

namespace dense {

/// Gaussian elimination with partial pivoting. Oracle/fallback for small
/// systems (tests only); refuses n > 200.
inline std::vector<double> solve(std::vector<std::vector<double>> A, std::vector<double> b) {
  const int n = static_cast<int>(b.size());
  if (n > 200) throw SolverError("dense::solve: system too large");
  for (int k = 0; k < n; ++k) {
    int piv = k;
    for (int i = k + 1; i < n; ++i)
      if (std::abs(A[i][k]) > std::abs(A[piv][k])) piv = i;
    if (A[piv][k] == 0.0) throw SolverError("dense::solve: singular matrix");
    std::swap(A[piv], A[k]);
    std::swap(b[piv], b[k]);
    for (int i = k + 1; i < n; ++i) {
      double f = A[i][k] / A[k][k];
      if (f == 0.0) continue;
      for (int j = k; j < n; ++j) A[i][j] -= f * A[k][j];
      b[i] -= f * b[k];
    }
  }
  std::vector<double> x(n, 0.0);
  for (int i = n - 1; i >= 0; --i) {
    double s = b[i];
    for (int j = i + 1; j < n; ++j) s -= A[i][j] * x[j];
    x[i] = s / A[i][i];
  }
  return x;
}

}  // namespace dense

}  // namespace jouleheat

#endif
