#pragma once

// Compressed sparse row matrices (square, double precision) with the handful
// of operations the solvers need.

#include <span>
#include <vector>

namespace elcont {

struct Triplet {
  int row = 0;
  int col = 0;
  double value = 0.0;
};

class SparseMatrix {
 public:
  SparseMatrix() = default;
  /// Builds an n-by-n CSR matrix from triplets; duplicates are summed,
  /// column indices end up sorted and unique within each row.
  SparseMatrix(int n, std::vector<Triplet> triplets);

  int n() const { return n_; }
  int nnz() const { return static_cast<int>(values_.size()); }
  const std::vector<int>& row_ptr() const { return row_ptr_; }
  const std::vector<int>& col_idx() const { return col_idx_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  double coeff(int i, int j) const;  // 0 when absent
  void multiply(std::span<const double> x, std::span<double> y) const;  // y = A x
  std::vector<double> multiply(std::span<const double> x) const;

  double max_abs() const;
  bool is_symmetric(double rel_tol = 1e-12) const;

  /// A + alpha * B; patterns are merged.
  SparseMatrix add_scaled(const SparseMatrix& b, double alpha) const;
  /// Rows and columns restricted to the given (sorted) index subset.
  SparseMatrix submatrix(std::span<const int> keep) const;

 private:
  int n_ = 0;
  std::vector<int> row_ptr_{0};
  std::vector<int> col_idx_;
  std::vector<double> values_;
};

}  // namespace elcont
