#pragma once

#include <cstddef>
#include <vector>

#include "rgae/clustering.hpp"
#include "rgae/dense.hpp"
#include "rgae/kernels.hpp"
#include "rgae/sparse.hpp"

namespace rgae {

/// BCE between sigmoid(Z Z^T) and a binary symmetric target.
double recon_loss(const DenseMatrix& z, const SparseMatrix& target, BceWeighting weighting);
BceResult recon_loss_and_grad(const DenseMatrix& z, const SparseMatrix& target, BceWeighting weighting);
/// Exact gradient of the plain loss: 2 sum_j (sigmoid(z_i.z_j) - a_ij) z_j.
DenseMatrix recon_grad_z(const DenseMatrix& z, const SparseMatrix& target);

/// 1/2 sum_ij a_ij |z_i - z_j|^2 over the stored entries of `a`.
double laplacian_quadratic(const DenseMatrix& z, const SparseMatrix& a);
/// Exact gradient of laplacian_quadratic:
/// sum_j a_ij (z_i - z_j) + sum_j a_ji (z_i - z_j).
DenseMatrix laplacian_grad(const DenseMatrix& z, const SparseMatrix& a);

/// sum_ij log(1 + exp(z_i.z_j)) - 1/2 sum_ij a_ij (|z_i|^2 + |z_j|^2),
/// over all ordered pairs.
double regularizer_R(const DenseMatrix& z, const SparseMatrix& a);

/// Embedded k-means loss in graph form: laplacian_quadratic(Z, A^clus).
double kmeans_embed_loss(const DenseMatrix& z, const SparseMatrix& a_clus);
DenseMatrix kmeans_grad_z(const DenseMatrix& z, const SparseMatrix& a_clus);

struct KMeansTerm {
  double loss = 0.0;
  DenseMatrix grad_z;  ///< 2 (z_i - mu_k) on counted rows, 0 elsewhere
};

/// Centroid form sum_k sum_{i in C_k} |z_i - mu_k|^2 with mu_k the mean of
/// the counted members. Rows with a negative label are ignored. Same value
/// and gradient as the graph form with build_cluster_graph(labels), in O(Nd).
KMeansTerm kmeans_centroid_term(const DenseMatrix& z, const Labels& labels, std::size_t k);

struct KlTerm {
  double loss = 0.0;
  DenseMatrix grad_z;
  DenseMatrix grad_centers;
  /// Some p_ij with q_ij > 0 fell below 1e-12 and was clamped in the log.
  bool clamped = false;
};

/// KL(Q || P) = sum_i sum_j q_ij log(q_ij / p_ij) with P = student_t_assign(Z,
/// centres) and Q held constant. Rows where `row_mask` is false (when given)
/// are left out of the sum.
KlTerm dgae_clus_loss(const DenseMatrix& z, const DenseMatrix& centers, const DenseMatrix& q,
                      const std::vector<bool>* row_mask = nullptr);
/// The loss value alone, from precomputed P.
double kl_divergence(const DenseMatrix& q, const DenseMatrix& p);

struct GaussianKl {
  double kl_prior = 0.0;  ///< (1/N) sum_i sum_d 1/2 (sigma^2 + mu^2 - 1 - log sigma^2)
  DenseMatrix grad_mu;
  DenseMatrix grad_logvar;
};

GaussianKl gaussian_kl_prior(const DenseMatrix& mu, const DenseMatrix& logvar);

struct VgaeTerms {
  double recon = 0.0;
  double kl_prior = 0.0;
};

/// Pos-weighted reconstruction of a reparameterised sample and the prior KL,
/// read off an EncoderCache produced in training mode.
VgaeTerms vgae_loss_terms(const DenseMatrix& z_sample, const DenseMatrix& mu, const DenseMatrix& logvar,
                          const SparseMatrix& target);

/// Per-epoch loss components reported by training.
struct LossBreakdown {
  double l_total = 0.0;
  double l_clus = 0.0;
  double l_bce = 0.0;
  double l_C_self = 0.0;
  double l_R_self = 0.0;
  double l_C_clus = 0.0;
  double gamma = 0.0;
};

}  // namespace rgae
