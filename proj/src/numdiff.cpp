#include "rgae/numdiff.hpp"

#include <algorithm>
#include <cmath>

#include "rgae/errors.hpp"

namespace rgae {

DenseMatrix finite_diff_grad(const std::function<double(const DenseMatrix&)>& f, const DenseMatrix& x,
                             double h) {
  if (!(h > 0.0)) throw RangeError("finite_diff_grad: step must be positive");
  DenseMatrix grad(x.rows(), x.cols());
  DenseMatrix probe = x;
  auto p = probe.values();
  auto g = grad.values();
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double orig = p[k];
    p[k] = orig + h;
    const double up = f(probe);
    p[k] = orig - h;
    const double down = f(probe);
    p[k] = orig;
    if (!std::isfinite(up) || !std::isfinite(down))
      throw NumericsError("finite_diff_grad: function returned a non-finite value");
    g[k] = (up - down) / (2.0 * h);
  }
  return grad;
}

Cosine cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw ShapeError("cosine: length mismatch");
  double uv = 0.0;
  double uu = 0.0;
  double vv = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    uv += u[k] * v[k];
    uu += u[k] * u[k];
    vv += v[k] * v[k];
  }
  const double nu = std::sqrt(uu);
  const double nv = std::sqrt(vv);
  if (nu < 1e-15 || nv < 1e-15) return {0.0, true};
  // sqrt(x * x) == x in round-to-nearest, so cosine(u, u) is exactly 1
  return {std::clamp(uv / std::sqrt(uu * vv), -1.0, 1.0), false};
}

double relative_error(const DenseMatrix& a, const DenseMatrix& b) {
  const double scale = std::max(1.0, [&] {
    double m = 0.0;
    for (double x : b.values()) m = std::max(m, std::abs(x));
    return m;
  }());
  return max_abs_diff(a, b) / scale;
}

}  // namespace rgae
