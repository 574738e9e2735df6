#pragma once

// Compute kernels shared by every module.
//
// rgae::kernels holds the OpenMP implementations used in production code.
// rgae::kernels::serial holds straightforward single-threaded references that
// the tests and the benchmark compare against.
//
// Determinism: every parallel kernel accumulates each output row in a fixed
// order, so results do not depend on the thread count. The all-pairs BCE
// visits symmetric tile pairs on a fixed schedule (see parallel.cpp); scalar
// reductions go through per-tile partials summed in a fixed order.

#include <cstddef>

#include "rgae/dense.hpp"
#include "rgae/sparse.hpp"

namespace rgae {

enum class BceWeighting {
  /// sum over all ordered pairs (i, j), including i == j
  plain,
  /// positive-class weighted mean with global normalisation, as in public GAE code
  pos_weighted,
};

struct BceResult {
  double loss = 0.0;
  DenseMatrix grad_z;  ///< dL/dZ; empty when not requested
};

/// Positive weight and global scale used by BceWeighting::pos_weighted.
struct BceScaling {
  double pos_weight = 1.0;
  double norm = 1.0;
};
BceScaling pos_weighted_scaling(std::size_t n_nodes, double positive_mass);

namespace kernels {

/// s * d
DenseMatrix spmm(const SparseMatrix& s, const DenseMatrix& d);
/// a * b
DenseMatrix gemm(const DenseMatrix& a, const DenseMatrix& b);
/// a^T * b
DenseMatrix gemm_tn(const DenseMatrix& a, const DenseMatrix& b);
/// a * b^T
DenseMatrix gemm_nt(const DenseMatrix& a, const DenseMatrix& b);

/// Binary cross-entropy between sigmoid(Z Z^T) and a symmetric target,
/// evaluated row by row so the N x N logits are never stored.
BceResult bce_all_pairs(const DenseMatrix& z, const SparseMatrix& target, BceWeighting weighting,
                        bool want_grad);

namespace serial {

DenseMatrix spmm(const SparseMatrix& s, const DenseMatrix& d);
DenseMatrix gemm(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix gemm_tn(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix gemm_nt(const DenseMatrix& a, const DenseMatrix& b);
BceResult bce_all_pairs(const DenseMatrix& z, const SparseMatrix& target, BceWeighting weighting,
                        bool want_grad);

}  // namespace serial
}  // namespace kernels

/// Number of worker threads the parallel kernels will use.
int kernel_threads();

}  // namespace rgae
