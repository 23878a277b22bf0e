#include "elcont/sparse.hpp"

#include <algorithm>
#include <cmath>

#include "elcont/error.hpp"

namespace elcont {

SparseMatrix::SparseMatrix(int n, std::vector<Triplet> triplets) : n_(n) {
  if (n < 0) throw Error("sparse: negative dimension");
  for (const auto& t : triplets)
    if (t.row < 0 || t.row >= n || t.col < 0 || t.col >= n)
      throw Error("sparse: triplet index out of range");
  std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  row_ptr_.assign(n + 1, 0);
  for (std::size_t i = 0; i < triplets.size();) {
    std::size_t j = i;
    double sum = 0.0;
    while (j < triplets.size() && triplets[j].row == triplets[i].row &&
           triplets[j].col == triplets[i].col)
      sum += triplets[j++].value;
    col_idx_.push_back(triplets[i].col);
    values_.push_back(sum);
    ++row_ptr_[triplets[i].row + 1];
    i = j;
  }
  for (int r = 0; r < n; ++r) row_ptr_[r + 1] += row_ptr_[r];
}

double SparseMatrix::coeff(int i, int j) const {
  for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
    if (col_idx_[k] == j) return values_[k];
  return 0.0;
}

void SparseMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  for (int i = 0; i < n_; ++i) {
    double s = 0.0;
    for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) s += values_[k] * x[col_idx_[k]];
    y[i] = s;
  }
}

std::vector<double> SparseMatrix::multiply(std::span<const double> x) const {
  std::vector<double> y(n_);
  multiply(x, y);
  return y;
}

double SparseMatrix::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

bool SparseMatrix::is_symmetric(double rel_tol) const {
  double scale = max_abs();
  for (int i = 0; i < n_; ++i)
    for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
      if (std::abs(values_[k] - coeff(col_idx_[k], i)) > rel_tol * scale) return false;
  return true;
}

SparseMatrix SparseMatrix::add_scaled(const SparseMatrix& b, double alpha) const {
  if (b.n_ != n_) throw Error("sparse add: dimension mismatch");
  std::vector<Triplet> t;
  t.reserve(values_.size() + b.values_.size());
  for (int i = 0; i < n_; ++i)
    for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
      t.push_back({i, col_idx_[k], values_[k]});
  for (int i = 0; i < n_; ++i)
    for (int k = b.row_ptr_[i]; k < b.row_ptr_[i + 1]; ++k)
      t.push_back({i, b.col_idx_[k], alpha * b.values_[k]});
  return SparseMatrix(n_, std::move(t));
}

SparseMatrix SparseMatrix::submatrix(std::span<const int> keep) const {
  std::vector<int> where(n_, -1);
  for (int i = 0; i < static_cast<int>(keep.size()); ++i) {
    if (keep[i] < 0 || keep[i] >= n_) throw Error("sparse submatrix: index out of range");
    where[keep[i]] = i;
  }
  std::vector<Triplet> t;
  for (int i = 0; i < n_; ++i) {
    if (where[i] < 0) continue;
    for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
      if (where[col_idx_[k]] >= 0) t.push_back({where[i], where[col_idx_[k]], values_[k]});
  }
  return SparseMatrix(static_cast<int>(keep.size()), std::move(t));
}

}  // namespace elcont
