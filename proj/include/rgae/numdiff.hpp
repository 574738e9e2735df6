#pragma once

#include <functional>
#include <span>

#include "rgae/dense.hpp"

namespace rgae {

/// Central-difference gradient (f(x + h e_k) - f(x - h e_k)) / 2h for every
/// coordinate of x. Throws NumericsError if f returns a non-finite value and
/// RangeError if h <= 0.
DenseMatrix finite_diff_grad(const std::function<double(const DenseMatrix&)>& f, const DenseMatrix& x,
                             double h = 1e-6);

struct Cosine {
  double value = 0.0;
  /// Set when either vector has norm < 1e-15; value is then 0.
  bool degenerate = false;
};

Cosine cosine(std::span<const double> u, std::span<const double> v);

/// max_k |a_k - b_k| / max(1, max_k |b_k|): the relative error used by the
/// gradient checks.
double relative_error(const DenseMatrix& a, const DenseMatrix& b);

}  // namespace rgae
