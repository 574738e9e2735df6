#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "rgae/dense.hpp"

namespace rgae {

struct Triplet {
  std::size_t row;
  std::size_t col;
  double value;
};

/// Compressed sparse row matrix. Column indices are sorted within each row
/// and unique.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  SparseMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), row_ptr_(rows + 1, 0) {}

  /// Duplicate (row, col) entries are summed.
  static SparseMatrix from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> entries);
  static SparseMatrix identity(std::size_t n);
  static SparseMatrix from_dense(const DenseMatrix& d, double drop_below = 0.0);

  /// Raw CSR constructor; validates sortedness and bounds.
  SparseMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_ptr,
               std::vector<std::size_t> col_idx, std::vector<double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t nnz() const noexcept { return col_idx_.size(); }

  std::span<const std::size_t> row_ptr() const noexcept { return row_ptr_; }
  std::span<const std::size_t> col_idx() const noexcept { return col_idx_; }
  std::span<const double> values() const noexcept { return values_; }

  std::span<const std::size_t> row_indices(std::size_t r) const noexcept {
    return {col_idx_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
  }
  std::span<const double> row_values(std::size_t r) const noexcept {
    return {values_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
  }
  std::size_t row_nnz(std::size_t r) const noexcept { return row_ptr_[r + 1] - row_ptr_[r]; }

  /// Binary search lookup; 0 when the entry is not stored.
  double at(std::size_t r, std::size_t c) const noexcept;
  bool contains(std::size_t r, std::size_t c) const noexcept;

  double sum() const noexcept;
  std::vector<double> row_sums() const;
  bool is_symmetric(double tol = 0.0) const;
  bool all_finite() const noexcept;

  SparseMatrix transpose() const;
  DenseMatrix to_dense() const;

  bool operator==(const SparseMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::size_t> col_idx_;
  std::vector<double> values_;
};

/// s1 + s2 (same shape).
SparseMatrix add(const SparseMatrix& a, const SparseMatrix& b, double scale_b = 1.0);

}  // namespace rgae
