#include "rgae/dense.hpp"

#include <algorithm>
#include <cmath>

#include "rgae/errors.hpp"

namespace rgae {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) throw ShapeError("DenseMatrix: data length != rows*cols");
}

DenseMatrix DenseMatrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  DenseMatrix m(r, c);
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("DenseMatrix::from_rows: ragged rows");
    std::copy(row.begin(), row.end(), m.row(i).begin());
    ++i;
  }
  return m;
}

void DenseMatrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool DenseMatrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

DenseMatrix DenseMatrix::transpose() const {
  DenseMatrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

namespace {
void require_same_shape(const DenseMatrix& a, const DenseMatrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeError(what);
}
}  // namespace

DenseMatrix operator+(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_shape(a, b, "operator+: shape mismatch");
  DenseMatrix out = a;
  axpy(1.0, b, out);
  return out;
}

DenseMatrix operator-(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_shape(a, b, "operator-: shape mismatch");
  DenseMatrix out = a;
  axpy(-1.0, b, out);
  return out;
}

DenseMatrix operator*(double s, const DenseMatrix& a) {
  DenseMatrix out = a;
  for (double& x : out.values()) x *= s;
  return out;
}

void axpy(double s, const DenseMatrix& b, DenseMatrix& a) {
  require_same_shape(a, b, "axpy: shape mismatch");
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) av[i] += s * bv[i];
}

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_shape(a, b, "max_abs_diff: shape mismatch");
  double m = 0.0;
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) m = std::max(m, std::abs(av[i] - bv[i]));
  return m;
}

double frobenius_norm(const DenseMatrix& a) {
  double s = 0.0;
  for (double x : a.values()) s += x * x;
  return std::sqrt(s);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

DenseMatrix gather_rows(const DenseMatrix& m, std::span<const std::size_t> rows) {
  DenseMatrix out(rows.size(), m.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] >= m.rows()) throw RangeError("gather_rows: row index out of range");
    auto src = m.row(rows[k]);
    std::copy(src.begin(), src.end(), out.row(k).begin());
  }
  return out;
}

}  // namespace rgae
