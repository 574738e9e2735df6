#include <algorithm>
#include <cstddef>
#include <vector>

#ifdef RGAE_HAVE_OPENMP
#include <omp.h>
#endif

#include "bce_terms.hpp"
#include "rgae/errors.hpp"
#include "rgae/kernels.hpp"

namespace rgae {

int kernel_threads() {
#ifdef RGAE_HAVE_OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

BceScaling pos_weighted_scaling(std::size_t n_nodes, double positive_mass) {
  const double nn = static_cast<double>(n_nodes) * static_cast<double>(n_nodes);
  if (positive_mass <= 0.0 || positive_mass >= nn) return {1.0, 0.5};
  return {(nn - positive_mass) / positive_mass, nn / (2.0 * (nn - positive_mass))};
}

namespace kernels {

namespace {
using Index = std::ptrdiff_t;  // OpenMP loop counters must be signed
}

DenseMatrix spmm(const SparseMatrix& s, const DenseMatrix& d) {
  if (s.cols() != d.rows()) throw ShapeError("spmm: s.cols != d.rows");
  const std::size_t m = d.cols();
  DenseMatrix out(s.rows(), m);
  const Index rows = static_cast<Index>(s.rows());
#pragma omp parallel for schedule(static)
  for (Index r = 0; r < rows; ++r) {
    auto idx = s.row_indices(static_cast<std::size_t>(r));
    auto val = s.row_values(static_cast<std::size_t>(r));
    double* o = out.row(static_cast<std::size_t>(r)).data();
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const double* src = d.row(idx[k]).data();
      const double v = val[k];
      for (std::size_t c = 0; c < m; ++c) o[c] += v * src[c];
    }
  }
  return out;
}

DenseMatrix gemm(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) throw ShapeError("gemm: inner dimensions differ");
  const std::size_t k = a.cols();
  const std::size_t n = b.cols();
  DenseMatrix out(a.rows(), n);
  const Index rows = static_cast<Index>(a.rows());
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < rows; ++i) {
    const double* ai = a.row(static_cast<std::size_t>(i)).data();
    double* o = out.row(static_cast<std::size_t>(i)).data();
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = ai[p];
      if (aip == 0.0) continue;
      const double* bp = b.row(p).data();
      for (std::size_t j = 0; j < n; ++j) o[j] += aip * bp[j];
    }
  }
  return out;
}

DenseMatrix gemm_tn(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows()) throw ShapeError("gemm_tn: row counts differ");
  const std::size_t k = a.rows();
  const std::size_t n = b.cols();
  DenseMatrix out(a.cols(), n);
  const Index rows = static_cast<Index>(a.cols());
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < rows; ++i) {
    double* o = out.row(static_cast<std::size_t>(i)).data();
    for (std::size_t p = 0; p < k; ++p) {
      const double api = a(p, static_cast<std::size_t>(i));
      if (api == 0.0) continue;
      const double* bp = b.row(p).data();
      for (std::size_t j = 0; j < n; ++j) o[j] += api * bp[j];
    }
  }
  return out;
}

DenseMatrix gemm_nt(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.cols()) throw ShapeError("gemm_nt: column counts differ");
  DenseMatrix out(a.rows(), b.rows());
  const Index rows = static_cast<Index>(a.rows());
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < rows; ++i) {
    auto ai = a.row(static_cast<std::size_t>(i));
    double* o = out.row(static_cast<std::size_t>(i)).data();
    for (std::size_t j = 0; j < b.rows(); ++j) o[j] = dot(ai, b.row(j));
  }
  return out;
}

namespace {

constexpr std::size_t kTile = 128;

struct BceJob {
  const DenseMatrix& z;
  const SparseMatrix& target;
  BceWeighting weighting;
  double pos_weight;
  double coef_scale;  // 2 * scale: each ordered pair enters the gradient of both endpoints
  DenseMatrix* grad;
};

// Sum of pair losses over rows [i0, i1) x columns [j0, j1). With `mirror` the
// tile stands for itself and its transpose: gradients go to both row blocks.
double bce_tile(const BceJob& job, std::size_t i0, std::size_t i1, std::size_t j0, std::size_t j1, bool mirror) {
  const std::size_t d = job.z.cols();
  double acc = 0.0;
  for (std::size_t i = i0; i < i1; ++i) {
    const double* zi = job.z.row(i).data();
    auto t_idx = job.target.row_indices(i);
    auto t_val = job.target.row_values(i);
    std::size_t cursor = static_cast<std::size_t>(std::lower_bound(t_idx.begin(), t_idx.end(), j0) - t_idx.begin());
    double* gi = job.grad ? job.grad->row(i).data() : nullptr;
    for (std::size_t j = j0; j < j1; ++j) {
      const double* zj = job.z.row(j).data();
      double logit = 0.0;
      for (std::size_t c = 0; c < d; ++c) logit += zi[c] * zj[c];
      double a = 0.0;
      if (cursor < t_idx.size() && t_idx[cursor] == j) a = t_val[cursor++];
      const detail::PairTerm term = detail::bce_pair(logit, a, job.weighting, job.pos_weight);
      acc += term.loss;
      if (gi != nullptr) {
        const double coef = job.coef_scale * term.dlogit;
        for (std::size_t c = 0; c < d; ++c) gi[c] += coef * zj[c];
        if (mirror) {
          double* gj = job.grad->row(j).data();
          for (std::size_t c = 0; c < d; ++c) gj[c] += coef * zi[c];
        }
      }
    }
  }
  return mirror ? 2.0 * acc : acc;
}

}  // namespace

// Diagonal tiles first, then the off-diagonal tile pairs in circle-method
// rounds. Pairs within a round touch disjoint row blocks, so they run in
// parallel without locks and every gradient row is accumulated in the same
// order whatever the thread count.
BceResult bce_all_pairs(const DenseMatrix& z, const SparseMatrix& target, BceWeighting weighting,
                        bool want_grad) {
  const std::size_t n = z.rows();
  const std::size_t d = z.cols();
  if (target.rows() != n || target.cols() != n) throw ShapeError("bce_all_pairs: target must be N x N");
  if (!target.is_symmetric()) throw ShapeError("bce_all_pairs: target must be symmetric");

  const BceScaling scaling = pos_weighted_scaling(n, target.sum());
  const double scale = detail::bce_scale(weighting, n, scaling.norm);

  BceResult result;
  if (want_grad) result.grad_z = DenseMatrix(n, d);
  const BceJob job{z, target, weighting, scaling.pos_weight, 2.0 * scale, want_grad ? &result.grad_z : nullptr};

  const std::size_t blocks = (n + kTile - 1) / kTile;
  auto lo = [&](std::size_t b) { return b * kTile; };
  auto hi = [&](std::size_t b) { return std::min(n, (b + 1) * kTile); };

  std::vector<double> diag(blocks, 0.0);
  const Index nb = static_cast<Index>(blocks);
#pragma omp parallel for schedule(dynamic, 1)
  for (Index b = 0; b < nb; ++b) {
    const auto u = static_cast<std::size_t>(b);
    diag[u] = bce_tile(job, lo(u), hi(u), lo(u), hi(u), false);
  }

  // circle method over an even number of slots; slot `blocks` is a bye when odd
  const std::size_t slots = blocks + (blocks % 2);
  const std::size_t rounds = slots > 1 ? slots - 1 : 0;
  const std::size_t per_round = slots / 2;
  std::vector<double> pair_loss(rounds * per_round, 0.0);
  for (std::size_t r = 0; r < rounds; ++r) {
    const Index np = static_cast<Index>(per_round);
#pragma omp parallel for schedule(dynamic, 1)
    for (Index s = 0; s < np; ++s) {
      const auto k = static_cast<std::size_t>(s);
      std::size_t a = 0;
      std::size_t b = 0;
      if (k == 0) {
        a = r;
        b = slots - 1;
      } else {
        a = (r + k) % (slots - 1);
        b = (r + slots - 1 - k) % (slots - 1);
      }
      if (a > b) std::swap(a, b);
      if (b >= blocks) continue;  // bye
      pair_loss[r * per_round + k] = bce_tile(job, lo(a), hi(a), lo(b), hi(b), true);
    }
  }

  double total = 0.0;
  for (double v : diag) total += v;
  for (double v : pair_loss) total += v;
  result.loss = scale * total;
  return result;
}

}  // namespace kernels
}  // namespace rgae
