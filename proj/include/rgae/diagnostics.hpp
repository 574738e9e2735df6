#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "rgae/clustering.hpp"
#include "rgae/dense.hpp"
#include "rgae/graph.hpp"
#include "rgae/losses.hpp"
#include "rgae/model.hpp"
#include "rgae/numdiff.hpp"
#include "rgae/operators.hpp"
#include "rgae/sparse.hpp"

namespace rgae {

/// Feature-randomness cosine: clustering-loss theta-gradient with the pseudo
/// labels against the same loss with the Hungarian-mapped truth. The loss is
/// the one the architecture trains with (KL for DGAE, embedded k-means
/// otherwise). With `omega` only the reliable rows enter either loss.
Cosine lambda_fr(const GaeModel& model, const EncoderInput& input, const Labels& pseudo, const Labels& truth,
                 std::size_t k, const ReliableSet* omega = nullptr);

/// Feature-drift cosine: plain-BCE theta-gradients against the
/// self-supervision target and against the supervised target.
Cosine lambda_fd(const GaeModel& model, const EncoderInput& input, const SparseMatrix& a_self,
                 const SparseMatrix& a_sup);

/// <sum_j a1_ij (z_i - z_j), sum_j a2_ij (z_i - z_j)>
double lambda_prime(const DenseMatrix& z, std::size_t i, const SparseMatrix& a1, const SparseMatrix& a2);
inline double lambda_prime_fr(const DenseMatrix& z, std::size_t i, const SparseMatrix& a_clus,
                              const SparseMatrix& a_sup) {
  return lambda_prime(z, i, a_clus, a_sup);
}
inline double lambda_prime_fd(const DenseMatrix& z, std::size_t i, const SparseMatrix& a_self_norm,
                              const SparseMatrix& a_sup) {
  return lambda_prime(z, i, a_self_norm, a_sup);
}

/// |x_i - h_sup(x_i)| - |h_self(x_i) - h_sup(x_i)| with h(x_i) = sum_j a_ij x_j.
double filter_impact(const DenseMatrix& x, std::size_t i, const SparseMatrix& a_self_norm, const SparseMatrix& a_sup);

struct DecompositionResiduals {
  double bce_split_rel = 0.0;  ///< plain BCE vs L_C + L_R
  double kmeans_graph_rel = 0.0;  ///< centroid k-means vs Laplacian form
  double combined_rel = 0.0;   ///< combined objective identity
};

DecompositionResiduals decomposition_residuals(const DenseMatrix& z, const SparseMatrix& a_self,
                                               const Labels& labels_pred, std::size_t k, double gamma);

struct GraphEvolution {
  std::size_t links_total = 0;
  std::size_t links_true = 0;
  std::size_t links_false = 0;
  std::size_t links_added_true = 0;
  std::size_t links_added_false = 0;
  std::size_t links_deleted_true = 0;
  std::size_t links_deleted_false = 0;
};

/// A link is "true" when its endpoints share a ground-truth label.
GraphEvolution graph_evolution_stats(const SelfSupervisionGraph& a_cs, const Labels& labels);

/// Prefix sums of (a - b) divided by the largest absolute prefix sum.
std::vector<double> cumulative_difference(const std::vector<double>& a, const std::vector<double>& b);

// ---- per-epoch trace ------------------------------------------------------

struct TraceRecord {
  std::size_t epoch = 0;
  double lambda_fr = 0.0;
  double lambda_fr_baseline = 0.0;
  double lambda_fd = 0.0;
  double lambda_fd_baseline = 0.0;
  bool lambda_available = false;
  std::size_t omega_size = 0;
  double acc_all = 0.0;
  double acc_omega = 0.0;
  double acc_complement = 0.0;
  double nmi = 0.0;
  double ari = 0.0;
  GraphEvolution links;
  LossBreakdown loss;
  double wall_time = 0.0;  ///< seconds since the clustering phase started
};

struct DiagnosticTrace {
  std::vector<TraceRecord> records;
};

/// Column order of the trace CSV.
const std::vector<std::string>& trace_columns();
void write_trace_csv(const DiagnosticTrace& trace, const std::filesystem::path& path);
nlohmann::json trace_summary(const DiagnosticTrace& trace);

}  // namespace rgae
