#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "rgae/dense.hpp"
#include "rgae/graph.hpp"
#include "rgae/sparse.hpp"

namespace rgae {

enum class AssignmentKind { gaussian_p_prime, student_t_p, hard_onehot };

/// N x K row-stochastic assignment matrix.
struct SoftAssignment {
  DenseMatrix matrix;
  AssignmentKind kind = AssignmentKind::hard_onehot;

  std::size_t n_nodes() const noexcept { return matrix.rows(); }
  std::size_t n_clusters() const noexcept { return matrix.cols(); }
  /// Row-wise argmax, ties to the lowest index.
  Labels labels() const;
};

/// Lowest index of the row maximum.
std::size_t row_argmax(std::span<const double> row);
Labels argmax_labels(const DenseMatrix& p);

/// Cluster centres with diagonal variances (floored at kVarianceFloor).
struct ClusterModel {
  DenseMatrix centers;
  DenseMatrix variances;
};

inline constexpr double kVarianceFloor = 1e-6;

struct KMeansResult {
  ClusterModel model;
  Labels labels;
  double inertia = 0.0;  ///< sum of squared distances to the assigned centre
};

/// Lloyd's algorithm from k-means++ seeds. The best of `n_init` restarts
/// (lowest inertia, earliest on ties) is returned. Empty clusters are
/// reseeded at the point farthest from its centre. RangeError if N < K or K == 0.
KMeansResult kmeans(const DenseMatrix& z, std::size_t k, std::uint64_t seed, std::size_t max_iter = 300,
                    std::size_t n_init = 10);

/// Means and per-dimension sample variances of each cluster's members.
/// Singleton and empty clusters get floor variances; empty clusters keep a
/// zero centre.
ClusterModel fit_cluster_model(const DenseMatrix& z, const Labels& labels, std::size_t k);

/// Sum of squared distances of each point to its cluster mean.
double kmeans_objective(const DenseMatrix& z, const Labels& labels, std::size_t k);

/// p'_ij proportional to exp(-1/2 (z_i - mu_j)^T Sigma_j^-1 (z_i - mu_j)).
SoftAssignment gaussian_soft_assign(const DenseMatrix& z, const ClusterModel& model);

/// Student's t kernel with one degree of freedom:
/// p_ij = (1 + |z_i - mu_j|^2)^-1 / sum_l (1 + |z_i - mu_l|^2)^-1.
SoftAssignment student_t_assign(const DenseMatrix& z, const DenseMatrix& centers);

/// One-hot rows at the row argmax (ties to the lowest index).
SoftAssignment hard_target(const SoftAssignment& p);
SoftAssignment one_hot(const Labels& labels, std::size_t k);

/// Minimum-cost assignment on a square cost matrix; result[r] is the column
/// given to row r. O(K^3).
std::vector<std::size_t> solve_assignment(const DenseMatrix& cost);

/// Permutation pi over [0, K) maximising #{i : pi(pred_i) = truth_i}.
std::vector<std::size_t> hungarian_map(const Labels& truth, const Labels& pred, std::size_t k);

/// Ground truth relabelled onto the predicted cluster indices: row i is
/// one-hot at pi^-1(truth_i).
SoftAssignment mapped_truth(const Labels& truth, const Labels& pred, std::size_t k);

struct ClusteringScores {
  double acc = 0.0;
  double nmi = 0.0;
  double ari = 0.0;
  /// Set when one of the partitions has zero entropy; nmi is then 0.
  bool nmi_degenerate = false;
};

ClusteringScores evaluate_clustering(const Labels& pred, const Labels& truth, std::size_t k);

/// a_ij = 1/|C_k| when i and j (including i == j) share cluster k. Nodes with
/// a negative label are left out (zero rows). RangeError on labels >= K.
SparseMatrix build_cluster_graph(const Labels& labels, std::size_t k);

}  // namespace rgae
