#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rgae/graph.hpp"
#include "rgae/model.hpp"
#include "rgae/training.hpp"

namespace rgae {

/// Flat JSON configuration for one experiment. Keys:
///   dataset, model, rethink, gamma, lr, pretrain_epochs, train_epochs,
///   alpha1, alpha2, m1, m2, convergence_fraction, ablation,
///   first_group_clustering, diagnostics_stride, kmeans_restarts, seeds,
///   perturbation, perturbation_seed, row_normalize, out, pretrain_ckpt
struct ExperimentConfig {
  std::filesystem::path dataset;
  Arch model = Arch::dgae;
  TrainConfig train;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::optional<PerturbSpec> perturbation;
  std::uint64_t perturbation_seed = 0;
  bool row_normalize = true;
  std::filesystem::path out_dir = "runs";
  /// Directory of shared pretraining checkpoints; <out>/checkpoints when unset.
  std::optional<std::filesystem::path> pretrain_ckpt;

  nlohmann::json to_json() const;
  /// Unknown keys and bad values raise ConfigError. Missing keys keep their defaults.
  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::filesystem::path& path);

  /// Hash of every setting that can change the numbers (output paths excluded).
  std::uint64_t hash() const;
  std::string variant_name() const;  ///< e.g. "dgae" or "r-dgae"
  std::filesystem::path checkpoint_dir() const;
  void validate() const;
};

struct SeedResult {
  std::uint64_t seed = 0;
  std::optional<ClusteringScores> scores;
  double wall_time_s = 0.0;
  std::string stop_reason;
  std::size_t epochs_run = 0;
  std::size_t final_omega_size = 0;
  std::string pretrain_hash;
  std::filesystem::path pretrain_checkpoint;
  std::filesystem::path checkpoint;
  std::filesystem::path trace_csv;
  std::filesystem::path graph_edges;
  std::vector<std::size_t> omega_history;
  TraceRecord first_record;
};

struct MetricTriple {
  double acc = 0.0;
  double nmi = 0.0;
  double ari = 0.0;
};

struct RunResult {
  std::string variant;
  std::string ablation;
  std::string perturbation;
  std::string perturbation_hash;
  std::vector<SeedResult> seeds;
  std::optional<MetricTriple> best;
  std::optional<MetricTriple> mean;
  std::optional<MetricTriple> stddev;
  double mean_wall_time_s = 0.0;

  nlohmann::json to_json() const;
};

/// Loads (and perturbs / normalises) the configured dataset.
AttributedGraph prepare_graph(const ExperimentConfig& cfg);

/// Pretrained model for (graph, arch, seed), loaded from the shared
/// checkpoint directory or trained and stored there.
GaeModel pretrained_model(const ExperimentConfig& cfg, const AttributedGraph& graph, const EncoderInput& input,
                          std::uint64_t seed, std::filesystem::path* checkpoint_path = nullptr);

/// Pretrain (or reuse) and run the clustering phase for every seed. Writes
/// <out>/results.json, <out>/seed-<s>/{trace.csv,trace_summary.json,
/// graph.tsv,graph.tsv.deleted,model.json}.
RunResult run(const ExperimentConfig& cfg);
RunResult run(const ExperimentConfig& cfg, const AttributedGraph& graph);

/// One run per ablation, sharing pretraining checkpoints; rows written to
/// <out>/ablation.json.
std::vector<RunResult> run_ablation_grid(const ExperimentConfig& base, const std::vector<AblationSpec>& axes);

/// For every perturbation, the baseline and the rethink variant on the same
/// perturbed graph and the same pretraining; rows written to
/// <out>/robustness.json.
std::vector<RunResult> run_robustness(const ExperimentConfig& base, const std::vector<PerturbSpec>& grid);

/// N rows of d tab-separated embedding values, then the label when known.
/// StateError when the checkpoint does not fit the graph.
void export_embeddings(const std::filesystem::path& checkpoint, const AttributedGraph& graph,
                       const std::filesystem::path& out);
DenseMatrix read_embeddings(const std::filesystem::path& path, std::size_t dim);

/// Writes JSON via a temporary file and rename.
void write_json_atomic(const nlohmann::json& j, const std::filesystem::path& path);

std::string hex64(std::uint64_t v);

}  // namespace rgae
