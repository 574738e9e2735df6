#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rgae/clustering.hpp"
#include "rgae/diagnostics.hpp"
#include "rgae/graph.hpp"
#include "rgae/model.hpp"
#include "rgae/operators.hpp"

namespace rgae {

enum class Ablation {
  none,
  no_alpha1,                  ///< alpha1 = 0
  no_alpha2,                  ///< alpha2 = 0
  no_xi,                      ///< Omega = V
  no_add_edge,                ///< Upsilon only deletes
  no_drop_edge,               ///< Upsilon only adds
  no_upsilon,                 ///< reconstruct A throughout
  fd_protection_single_step,  ///< Upsilon over V once, target then fixed
  fr_correction_delay,        ///< Omega = V for the first `delay` epochs
};

struct AblationSpec {
  Ablation kind = Ablation::none;
  std::size_t delay = 0;

  /// "none", "no_alpha1", ..., "fr_correction_delay:E"
  static AblationSpec parse(const std::string& text);
  std::string to_string() const;
};

struct TrainConfig {
  double gamma = 0.001;
  double learning_rate = 0.01;
  std::size_t pretrain_epochs = 200;
  std::size_t train_epochs = 200;
  double alpha1 = 0.3;
  std::optional<double> alpha2;  ///< alpha1 / 2 when unset
  std::size_t m1 = 20;
  std::size_t m2 = 15;
  std::uint64_t seed = 0;
  bool rethink = false;
  double convergence_fraction = 0.9;
  AblationSpec ablation;
  /// R-GAE / R-VGAE: also apply the embedded k-means term over Omega.
  bool first_group_clustering = false;
  /// Lambda diagnostics every `diagnostics_stride` epochs; 0 disables them.
  std::size_t diagnostics_stride = 1;
  std::size_t kmeans_restarts = 10;

  double effective_alpha1() const;
  double effective_alpha2() const;
  /// ConfigError on out-of-range values or conflicting options.
  void validate() const;
};

/// Full-batch Adam on the pos-weighted reconstruction of A (plus the prior
/// KL for VGAE). Returns the per-epoch loss. TrainingError on divergence.
std::vector<double> pretrain(GaeModel& model, const AttributedGraph& graph, const EncoderInput& input,
                             const TrainConfig& cfg);

using TraceSink = std::function<void(const TraceRecord&)>;

struct TrainOutcome {
  DiagnosticTrace trace;
  std::string stop_reason;  ///< "epoch_cap" or "omega_converged"
  std::size_t epochs_run = 0;
  Labels final_labels;
  std::optional<ClusteringScores> final_scores;
  SelfSupervisionGraph final_graph;
  ReliableSet final_omega;
  /// Omega and labels that built final_graph (the last Upsilon update)
  ReliableSet graph_omega;
  Labels graph_labels;
  /// |Omega| after each Xi update, in order
  std::vector<std::size_t> omega_history;
  /// seconds spent in the clustering phase, label-dependent evaluation excluded
  double wall_time = 0.0;
};

/// Current cluster assignment of a model: Student-t argmax for DGAE, k-means
/// on the embedding otherwise.
Labels predict_labels(const GaeModel& model, const EncoderInput& input, std::size_t k, std::uint64_t seed,
                      std::size_t kmeans_restarts = 10);

/// Clustering phase. With cfg.rethink the clustering term is restricted to
/// Omega (refreshed every M1 epochs) and the reconstruction target is
/// Upsilon's graph (refreshed every M2 epochs); otherwise Omega = V and the
/// target is A. DGAE centres are initialised by k-means when absent.
TrainOutcome train_joint(GaeModel& model, const AttributedGraph& graph, const EncoderInput& input,
                         const TrainConfig& cfg, const TraceSink& sink = {});

}  // namespace rgae
