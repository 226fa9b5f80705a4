#ifndef JOULEHEAT_SPARSE_HPP
#define JOULEHEAT_SPARSE_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <tuple>
#include <vector>

#include "jouleheat/core.hpp"

namespace jouleheat {

struct Triplet {
  int row, col;
  double value;
};

/// Compressed sparse row matrix with sorted, unique column indices per row.
class SparseMatrix {
 public:
  SparseMatrix() = default;

  static SparseMatrix from_triplets(int rows, int cols, std::vector<Triplet> triplets) {
    // Stable sort keeps duplicate entries in emission order, so summation
    // order matches add_at-based reassembly bit for bit.
    std::stable_sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
      return std::tie(a.row, a.col) < std::tie(b.row, b.col);
    });
    SparseMatrix m;
    m.rows_ = rows;
    m.cols_ = cols;
    m.row_offsets_.assign(rows + 1, 0);
    for (std::size_t i = 0; i < triplets.size();) {
      std::size_t j = i;
      double sum = 0.0;
      while (j < triplets.size() && triplets[j].row == triplets[i].row &&
             triplets[j].col == triplets[i].col) {
        sum += triplets[j].value;
        ++j;
      }
      m.col_indices_.push_back(triplets[i].col);
      m.values_.push_back(sum);
      m.row_offsets_[triplets[i].row + 1] += 1;
      i = j;
    }
    for (int r = 0; r < rows; ++r) m.row_offsets_[r + 1] += m.row_offsets_[r];
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int nnz() const { return static_cast<int>(values_.size()); }

  int row_begin(int r) const { return row_offsets_[r]; }
  int row_end(int r) const { return row_offsets_[r + 1]; }
  int col_index(int k) const { return col_indices_[k]; }
  double value(int k) const { return values_[k]; }
  double& value(int k) { return values_[k]; }

  void set_zero() { std::fill(values_.begin(), values_.end(), 0.0); }

  /// Accumulates into an existing structural entry (pattern reuse for the
  /// per-iteration reassembly in the stepper). Missing entries are an error.
  void add_at(int row, int col, double v) {
    int lo = row_offsets_[row], hi = row_offsets_[row + 1];
    auto first = col_indices_.begin() + lo;
    auto last = col_indices_.begin() + hi;
    auto it = std::lower_bound(first, last, col);
    if (it == last || *it != col) throw SolverError("add_at: entry outside sparsity pattern");
    values_[lo + static_cast<int>(it - first)] += v;
  }

  double coeff(int row, int col) const {
    for (int k = row_offsets_[row]; k < row_offsets_[row + 1]; ++k)
      if (col_indices_[k] == col) return values_[k];
    return 0.0;
  }

  std::vector<double> multiply(const std::vector<double>& x) const {
    if (static_cast<int>(x.size()) != cols_) throw SolverError("spmv: dimension mismatch");
    std::vector<double> y(rows_, 0.0);
    for (int r = 0; r < rows_; ++r) {
      double acc = 0.0;
      for (int k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k)
        acc += values_[k] * x[col_indices_[k]];
      y[r] = acc;
    }
    return y;
  }

  std::vector<double> multiply_transpose(const std::vector<double>& x) const {
    if (static_cast<int>(x.size()) != rows_) throw SolverError("spmv^T: dimension mismatch");
    std::vector<double> y(cols_, 0.0);
    for (int r = 0; r < rows_; ++r)
      for (int k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k)
        y[col_indices_[k]] += values_[k] * x[r];
    return y;
  }

  std::vector<double> diagonal() const {
    std::vector<double> d(rows_, 0.0);
    for (int r = 0; r < rows_; ++r) d[r] = coeff(r, r);
    return d;
  }

  /// max_ij |A_ij - A_ji| (symmetry audit).
  double symmetry_error() const {
    double e = 0.0;
    for (int r = 0; r < rows_; ++r)
      for (int k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k)
        e = std::max(e, std::abs(values_[k] - coeff(col_indices_[k], r)));
    return e;
  }

  std::vector<std::vector<double>> to_dense() const {
    std::vector<std::vector<double>> d(rows_, std::vector<double>(cols_, 0.0));
    for (int r = 0; r < rows_; ++r)
      for (int k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k)
        d[r][col_indices_[k]] += values_[k];
    return d;
  }

  /// Matrix Market coordinate export (1-based, general).
  void write_matrix_market(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw SolverError("cannot open " + path);
    out << "%%MatrixMarket matrix coordinate real general\n";
    out << rows_ << " " << cols_ << " " << nnz() << "\n";
    char buf[64];
    for (int r = 0; r < rows_; ++r)
      for (int k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) {
        std::snprintf(buf, sizeof buf, "%d %d %.16e\n", r + 1, col_indices_[k] + 1, values_[k]);
        out << buf;
      }
  }

 private:
  int rows_ = 0, cols_ = 0;
  std::vector<int> row_offsets_{0};
  std::vector<int> col_indices_;
  std::vector<double> values_;
};

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

inline void axpy(double alpha, const std::vector<double>& x, std::vector<double>& y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

}  // namespace jouleheat

#endif
