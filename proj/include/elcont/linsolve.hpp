#pragma once

// Direct solves, determinant signs and generalized eigenpairs for the sparse
// systems produced by the FEM layer. Factorization is banded LU with partial
// pivoting after reverse Cuthill-McKee reordering; eigenpairs come from
// shift-invert Lanczos with full reorthogonalization.

#include <optional>
#include <span>
#include <vector>

#include "elcont/error.hpp"
#include "elcont/sparse.hpp"

namespace elcont {

/// Thrown when a matrix is singular at working precision (pivot below
/// 1e-14 * max|A|). Event detection catches this near folds.
struct SingularMatrixError : Error {
  using Error::Error;
};

class LuFactorization {
 public:
  explicit LuFactorization(const SparseMatrix& a);

  /// True when a pivot fell below 1e-14 * max|A| during elimination.
  bool singular() const { return singular_; }
  /// Sign of det(A) from pivot signs and permutation parity; 0 when singular.
  int det_sign() const;
  double min_pivot() const { return min_pivot_; }

  /// Solves A x = b. Throws SingularMatrixError when singular().
  std::vector<double> solve(std::span<const double> b) const;

  int n() const { return n_; }
  int bandwidth() const { return band_; }

 private:
  int n_ = 0;
  int band_ = 0;       // half bandwidth after reordering
  int ldab_ = 0;       // leading dimension of band storage
  std::vector<int> perm_, iperm_;  // RCM ordering: row i of PAP^T is perm_[i] of A
  std::vector<double> ab_;         // LAPACK-style band storage, column-major
  std::vector<int> pivot_row_;     // partial-pivoting row swaps
  bool singular_ = false;
  bool parity_odd_ = false;
  double min_pivot_ = 0.0;
  double max_abs_ = 0.0;
  int neg_pivots_ = 0;
};

/// One-shot solve of A x = b.
std::vector<double> lu_solve(const SparseMatrix& a, std::span<const double> b);

/// Sign of det(A): +1, -1, or 0 when singular at working precision.
int det_sign(const SparseMatrix& a);

struct BorderedResult {
  std::vector<double> x;
  double y = 0.0;
};

/// Solves [[A, b], [c^T, d]] (x, y) = (f, g) by block elimination (two solves
/// with A plus a scalar Schur complement). When A is singular but the bordered
/// matrix is regular, falls back to factoring the assembled bordered matrix.
/// Throws SingularMatrixError when the bordered matrix itself is singular.
BorderedResult solve_bordered(const SparseMatrix& a, std::span<const double> b,
                              std::span<const double> c, double d,
                              std::span<const double> f, double g);

struct EigenOptions {
  /// Shift for the shift-invert transform; must lie strictly below the
  /// smallest eigenvalue. Default: smallest Gershgorin bound of the pencil,
  /// minus one.
  std::optional<double> shift;
  double residual_tol = 1e-8;
  int max_subspace = 0;  // 0: automatic
};

struct EigenResult {
  std::vector<double> values;                // ascending
  std::vector<std::vector<double>> vectors;  // M-orthonormal
  std::vector<char> converged;               // per-pair residual check
  bool all_converged = false;
  int n_negative(double tol = 0.0) const;
};

/// k smallest eigenvalues of A psi = lambda M psi with A symmetric and M
/// symmetric positive definite. Pairs satisfy ||A psi - lambda M psi|| <=
/// residual_tol * ||psi|| when flagged converged.
EigenResult eigs_generalized(const SparseMatrix& a, const SparseMatrix& m, int k,
                             const EigenOptions& opts = {});

}  // namespace elcont
