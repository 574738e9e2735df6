#include "rgae/losses.hpp"

#include <algorithm>
#include <cmath>

#include "rgae/errors.hpp"

namespace rgae {

namespace {

double softplus(double s) { return std::max(s, 0.0) + std::log1p(std::exp(-std::abs(s))); }

void check_square(const DenseMatrix& z, const SparseMatrix& a, const char* who) {
  if (a.rows() != z.rows() || a.cols() != z.rows()) throw ShapeError(std::string(who) + ": graph is not N x N");
}

}  // namespace

double recon_loss(const DenseMatrix& z, const SparseMatrix& target, BceWeighting weighting) {
  return kernels::bce_all_pairs(z, target, weighting, false).loss;
}

BceResult recon_loss_and_grad(const DenseMatrix& z, const SparseMatrix& target, BceWeighting weighting) {
  return kernels::bce_all_pairs(z, target, weighting, true);
}

DenseMatrix recon_grad_z(const DenseMatrix& z, const SparseMatrix& target) {
  return kernels::bce_all_pairs(z, target, BceWeighting::plain, true).grad_z;
}

double laplacian_quadratic(const DenseMatrix& z, const SparseMatrix& a) {
  check_square(z, a, "laplacian_quadratic");
  double total = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto idx = a.row_indices(i);
    auto val = a.row_values(i);
    for (std::size_t k = 0; k < idx.size(); ++k) total += val[k] * squared_distance(z.row(i), z.row(idx[k]));
  }
  return 0.5 * total;
}

DenseMatrix laplacian_grad(const DenseMatrix& z, const SparseMatrix& a) {
  check_square(z, a, "laplacian_grad");
  const std::size_t d = z.cols();
  DenseMatrix g(z.rows(), d);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto idx = a.row_indices(i);
    auto val = a.row_values(i);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const std::size_t j = idx[k];
      for (std::size_t t = 0; t < d; ++t) {
        const double diff = val[k] * (z(i, t) - z(j, t));
        g(i, t) += diff;
        g(j, t) -= diff;
      }
    }
  }
  return g;
}

double regularizer_R(const DenseMatrix& z, const SparseMatrix& a) {
  check_square(z, a, "regularizer_R");
  const std::size_t n = z.rows();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) row += softplus(dot(z.row(i), z.row(j)));
    total += row;
  }
  double pull = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    auto idx = a.row_indices(i);
    auto val = a.row_values(i);
    const double ni = dot(z.row(i), z.row(i));
    for (std::size_t k = 0; k < idx.size(); ++k) pull += val[k] * (ni + dot(z.row(idx[k]), z.row(idx[k])));
  }
  return total - 0.5 * pull;
}

double kmeans_embed_loss(const DenseMatrix& z, const SparseMatrix& a_clus) { return laplacian_quadratic(z, a_clus); }

DenseMatrix kmeans_grad_z(const DenseMatrix& z, const SparseMatrix& a_clus) { return laplacian_grad(z, a_clus); }

KMeansTerm kmeans_centroid_term(const DenseMatrix& z, const Labels& labels, std::size_t k) {
  if (labels.size() != z.rows()) throw ShapeError("kmeans_centroid_term: label count != rows");
  const std::size_t d = z.cols();
  DenseMatrix mu(k, d);
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < z.rows(); ++i) {
    if (labels[i] < 0) continue;
    const auto c = static_cast<std::size_t>(labels[i]);
    if (c >= k) throw RangeError("kmeans_centroid_term: label out of range");
    ++counts[c];
    for (std::size_t t = 0; t < d; ++t) mu(c, t) += z(i, t);
  }
  for (std::size_t c = 0; c < k; ++c)
    if (counts[c] > 0)
      for (std::size_t t = 0; t < d; ++t) mu(c, t) /= static_cast<double>(counts[c]);
  KMeansTerm out{0.0, DenseMatrix(z.rows(), d)};
  for (std::size_t i = 0; i < z.rows(); ++i) {
    if (labels[i] < 0) continue;
    const auto c = static_cast<std::size_t>(labels[i]);
    for (std::size_t t = 0; t < d; ++t) {
      const double e = z(i, t) - mu(c, t);
      out.loss += e * e;
      out.grad_z(i, t) = 2.0 * e;
    }
  }
  return out;
}

KlTerm dgae_clus_loss(const DenseMatrix& z, const DenseMatrix& centers, const DenseMatrix& q,
                      const std::vector<bool>* row_mask) {
  const std::size_t n = z.rows();
  const std::size_t k = centers.rows();
  const std::size_t d = z.cols();
  if (centers.cols() != d) throw ShapeError("dgae_clus_loss: centre dimension != embedding dimension");
  if (q.rows() != n || q.cols() != k) throw ShapeError("dgae_clus_loss: Q must be N x K");
  if (row_mask && row_mask->size() != n) throw ShapeError("dgae_clus_loss: mask length != N");

  KlTerm out{0.0, DenseMatrix(n, d), DenseMatrix(k, d), false};
  std::vector<double> kern(k), p(k);
  for (std::size_t i = 0; i < n; ++i) {
    if (row_mask && !(*row_mask)[i]) continue;
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      kern[j] = 1.0 / (1.0 + squared_distance(z.row(i), centers.row(j)));
      s += kern[j];
    }
    double q_mass = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      p[j] = kern[j] / s;
      const double qij = q(i, j);
      q_mass += qij;
      if (qij > 0.0) {
        if (p[j] < 1e-12) out.clamped = true;
        out.loss += qij * (std::log(qij) - std::log(std::max(p[j], 1e-12)));
      }
    }
    // d(-log p_ij)/dz_i = 2 k_ij (z_i - mu_j) - sum_l p_il 2 k_il (z_i - mu_l)
    for (std::size_t j = 0; j < k; ++j) {
      const double coeff = 2.0 * kern[j] * (q(i, j) - p[j] * q_mass);
      for (std::size_t t = 0; t < d; ++t) {
        const double v = coeff * (z(i, t) - centers(j, t));
        out.grad_z(i, t) += v;
        out.grad_centers(j, t) -= v;
      }
    }
  }
  return out;
}

double kl_divergence(const DenseMatrix& q, const DenseMatrix& p) {
  if (q.rows() != p.rows() || q.cols() != p.cols()) throw ShapeError("kl_divergence: shape mismatch");
  double total = 0.0;
  auto qv = q.values();
  auto pv = p.values();
  for (std::size_t k = 0; k < qv.size(); ++k)
    if (qv[k] > 0.0) total += qv[k] * (std::log(qv[k]) - std::log(std::max(pv[k], 1e-12)));
  return total;
}

GaussianKl gaussian_kl_prior(const DenseMatrix& mu, const DenseMatrix& logvar) {
  if (mu.rows() != logvar.rows() || mu.cols() != logvar.cols()) throw ShapeError("gaussian_kl_prior: shape mismatch");
  const double inv_n = mu.rows() > 0 ? 1.0 / static_cast<double>(mu.rows()) : 0.0;
  GaussianKl out{0.0, DenseMatrix(mu.rows(), mu.cols()), DenseMatrix(mu.rows(), mu.cols())};
  auto m = mu.values();
  auto lv = logvar.values();
  auto gm = out.grad_mu.values();
  auto gl = out.grad_logvar.values();
  for (std::size_t k = 0; k < m.size(); ++k) {
    const double var = std::exp(lv[k]);
    out.kl_prior += 0.5 * (var + m[k] * m[k] - 1.0 - lv[k]);
    gm[k] = m[k] * inv_n;
    gl[k] = 0.5 * (var - 1.0) * inv_n;
  }
  out.kl_prior *= inv_n;
  return out;
}

VgaeTerms vgae_loss_terms(const DenseMatrix& z_sample, const DenseMatrix& mu, const DenseMatrix& logvar,
                          const SparseMatrix& target) {
  return {recon_loss(z_sample, target, BceWeighting::pos_weighted), gaussian_kl_prior(mu, logvar).kl_prior};
}

}  // namespace rgae
