#include "rgae/sparse.hpp"

#include <algorithm>
#include <cmath>

#include "rgae/errors.hpp"

namespace rgae {

SparseMatrix::SparseMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_ptr,
                           std::vector<std::size_t> col_idx, std::vector<double> values)
    : rows_(rows),
      cols_(cols),
      row_ptr_(std::move(row_ptr)),
      col_idx_(std::move(col_idx)),
      values_(std::move(values)) {
  if (row_ptr_.size() != rows_ + 1 || row_ptr_.front() != 0 || row_ptr_.back() != col_idx_.size() ||
      col_idx_.size() != values_.size())
    throw ShapeError("SparseMatrix: inconsistent CSR arrays");
  for (std::size_t r = 0; r < rows_; ++r) {
    if (row_ptr_[r] > row_ptr_[r + 1]) throw ShapeError("SparseMatrix: row_ptr not monotone");
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      if (col_idx_[k] >= cols_) throw ShapeError("SparseMatrix: column index out of range");
      if (k > row_ptr_[r] && col_idx_[k] <= col_idx_[k - 1])
        throw ShapeError("SparseMatrix: column indices not strictly increasing");
    }
  }
}

SparseMatrix SparseMatrix::from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> entries) {
  for (const auto& t : entries)
    if (t.row >= rows || t.col >= cols) throw ShapeError("from_triplets: index out of range");
  std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  std::vector<std::size_t> row_ptr(rows + 1, 0);
  std::vector<std::size_t> col_idx;
  std::vector<double> values;
  col_idx.reserve(entries.size());
  values.reserve(entries.size());
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const auto& t = entries[k];
    if (k > 0 && entries[k - 1].row == t.row && entries[k - 1].col == t.col) {
      values.back() += t.value;
      continue;
    }
    col_idx.push_back(t.col);
    values.push_back(t.value);
    ++row_ptr[t.row + 1];
  }
  for (std::size_t r = 0; r < rows; ++r) row_ptr[r + 1] += row_ptr[r];
  return SparseMatrix(rows, cols, std::move(row_ptr), std::move(col_idx), std::move(values));
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
  std::vector<std::size_t> row_ptr(n + 1);
  std::vector<std::size_t> col_idx(n);
  for (std::size_t i = 0; i <= n; ++i) row_ptr[i] = i;
  for (std::size_t i = 0; i < n; ++i) col_idx[i] = i;
  return SparseMatrix(n, n, std::move(row_ptr), std::move(col_idx), std::vector<double>(n, 1.0));
}

SparseMatrix SparseMatrix::from_dense(const DenseMatrix& d, double drop_below) {
  std::vector<std::size_t> row_ptr(d.rows() + 1, 0);
  std::vector<std::size_t> col_idx;
  std::vector<double> values;
  for (std::size_t r = 0; r < d.rows(); ++r) {
    for (std::size_t c = 0; c < d.cols(); ++c) {
      const double v = d(r, c);
      if (v != 0.0 && std::abs(v) >= drop_below) {
        col_idx.push_back(c);
        values.push_back(v);
      }
    }
    row_ptr[r + 1] = col_idx.size();
  }
  return SparseMatrix(d.rows(), d.cols(), std::move(row_ptr), std::move(col_idx), std::move(values));
}

double SparseMatrix::at(std::size_t r, std::size_t c) const noexcept {
  auto idx = row_indices(r);
  auto it = std::lower_bound(idx.begin(), idx.end(), c);
  if (it == idx.end() || *it != c) return 0.0;
  return values_[row_ptr_[r] + static_cast<std::size_t>(it - idx.begin())];
}

bool SparseMatrix::contains(std::size_t r, std::size_t c) const noexcept {
  auto idx = row_indices(r);
  return std::binary_search(idx.begin(), idx.end(), c);
}

double SparseMatrix::sum() const noexcept {
  double s = 0.0;
  for (double v : values_) s += v;
  return s;
}

std::vector<double> SparseMatrix::row_sums() const {
  std::vector<double> out(rows_, 0.0);
  for (std::size_t r = 0; r < rows_; ++r)
    for (double v : row_values(r)) out[r] += v;
  return out;
}

bool SparseMatrix::is_symmetric(double tol) const {
  if (rows_ != cols_) return false;
  for (std::size_t r = 0; r < rows_; ++r) {
    auto idx = row_indices(r);
    auto val = row_values(r);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      if (!contains(idx[k], r)) return false;
      if (std::abs(at(idx[k], r) - val[k]) > tol) return false;
    }
  }
  return true;
}

bool SparseMatrix::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

SparseMatrix SparseMatrix::transpose() const {
  std::vector<std::size_t> row_ptr(cols_ + 1, 0);
  for (std::size_t c : col_idx_) ++row_ptr[c + 1];
  for (std::size_t c = 0; c < cols_; ++c) row_ptr[c + 1] += row_ptr[c];
  std::vector<std::size_t> cursor(row_ptr.begin(), row_ptr.end() - 1);
  std::vector<std::size_t> col_idx(nnz());
  std::vector<double> values(nnz());
  // rows visited in increasing order keep the transposed rows sorted
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      const std::size_t dst = cursor[col_idx_[k]]++;
      col_idx[dst] = r;
      values[dst] = values_[k];
    }
  }
  return SparseMatrix(cols_, rows_, std::move(row_ptr), std::move(col_idx), std::move(values));
}

DenseMatrix SparseMatrix::to_dense() const {
  DenseMatrix d(rows_, cols_);
  for (std::size_t r = 0; r < rows_; ++r) {
    auto idx = row_indices(r);
    auto val = row_values(r);
    for (std::size_t k = 0; k < idx.size(); ++k) d(r, idx[k]) = val[k];
  }
  return d;
}

SparseMatrix add(const SparseMatrix& a, const SparseMatrix& b, double scale_b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeError("add: shape mismatch");
  std::vector<Triplet> t;
  t.reserve(a.nnz() + b.nnz());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto ai = a.row_indices(r);
    auto av = a.row_values(r);
    for (std::size_t k = 0; k < ai.size(); ++k) t.push_back({r, ai[k], av[k]});
    auto bi = b.row_indices(r);
    auto bv = b.row_values(r);
    for (std::size_t k = 0; k < bi.size(); ++k) t.push_back({r, bi[k], scale_b * bv[k]});
  }
  return SparseMatrix::from_triplets(a.rows(), a.cols(), std::move(t));
}

}  // namespace rgae
