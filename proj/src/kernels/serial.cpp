// Single-threaded reference kernels. Kept deliberately plain: they are the
// oracle the parallel kernels are tested against and the baseline the
// benchmark reports speedups over.

#include "bce_terms.hpp"
#include "rgae/errors.hpp"
#include "rgae/kernels.hpp"

namespace rgae::kernels::serial {

DenseMatrix spmm(const SparseMatrix& s, const DenseMatrix& d) {
  if (s.cols() != d.rows()) throw ShapeError("spmm: s.cols != d.rows");
  DenseMatrix out(s.rows(), d.cols());
  for (std::size_t r = 0; r < s.rows(); ++r) {
    auto idx = s.row_indices(r);
    auto val = s.row_values(r);
    for (std::size_t k = 0; k < idx.size(); ++k)
      for (std::size_t c = 0; c < d.cols(); ++c) out(r, c) += val[k] * d(idx[k], c);
  }
  return out;
}

DenseMatrix gemm(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) throw ShapeError("gemm: inner dimensions differ");
  DenseMatrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t p = 0; p < a.cols(); ++p)
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += a(i, p) * b(p, j);
  return out;
}

DenseMatrix gemm_tn(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows()) throw ShapeError("gemm_tn: row counts differ");
  DenseMatrix out(a.cols(), b.cols());
  for (std::size_t i = 0; i < a.cols(); ++i)
    for (std::size_t p = 0; p < a.rows(); ++p)
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += a(p, i) * b(p, j);
  return out;
}

DenseMatrix gemm_nt(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.cols()) throw ShapeError("gemm_nt: column counts differ");
  DenseMatrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < a.cols(); ++p) s += a(i, p) * b(j, p);
      out(i, j) = s;
    }
  return out;
}

BceResult bce_all_pairs(const DenseMatrix& z, const SparseMatrix& target, BceWeighting weighting,
                        bool want_grad) {
  const std::size_t n = z.rows();
  const std::size_t d = z.cols();
  if (target.rows() != n || target.cols() != n) throw ShapeError("bce_all_pairs: target must be N x N");
  const BceScaling scaling = pos_weighted_scaling(n, target.sum());
  const double scale = detail::bce_scale(weighting, n, scaling.norm);

  // Dense target: the reference does not rely on CSR traversal order.
  const DenseMatrix a = target.to_dense();
  BceResult result;
  if (want_grad) result.grad_z = DenseMatrix(n, d);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double logit = dot(z.row(i), z.row(j));
      const detail::PairTerm term = detail::bce_pair(logit, a(i, j), weighting, scaling.pos_weight);
      total += term.loss;
      if (want_grad) {
        // d logit_ij / d z_i = z_j and d logit_ij / d z_j = z_i; no symmetry assumed
        for (std::size_t c = 0; c < d; ++c) {
          result.grad_z(i, c) += scale * term.dlogit * z(j, c);
          result.grad_z(j, c) += scale * term.dlogit * z(i, c);
        }
      }
    }
  }
  result.loss = scale * total;
  return result;
}

}  // namespace rgae::kernels::serial
