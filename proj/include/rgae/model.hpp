#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "rgae/dense.hpp"
#include "rgae/graph.hpp"
#include "rgae/optim.hpp"
#include "rgae/rng.hpp"
#include "rgae/sparse.hpp"

namespace rgae {

enum class Arch { gae, vgae, dgae };

std::string to_string(Arch arch);
/// Throws ConfigError for unknown names.
Arch parse_arch(const std::string& name);

/// Propagation matrix and features in the layout the encoder consumes.
struct EncoderInput {
  SparseMatrix a_prop;  ///< D~^-1/2 (A + I) D~^-1/2
  SparseMatrix x;       ///< features, stored sparse (bag-of-words inputs are ~1% dense)
  SparseMatrix x_t;

  EncoderInput() = default;
  EncoderInput(SparseMatrix propagation, const DenseMatrix& features);
  static EncoderInput from_graph(const AttributedGraph& graph);

  std::size_t n_nodes() const noexcept { return a_prop.rows(); }
  std::size_t input_dim() const noexcept { return x.cols(); }
};

enum class EncodeMode {
  /// VGAE draws Z = mu + sigma * eps
  train,
  /// VGAE returns mu
  eval,
};

/// Forward activations kept for backprop. Tied to the parameter version that
/// produced them.
struct EncoderCache {
  std::uint64_t version = 0;
  const EncoderInput* input = nullptr;
  DenseMatrix h1_pre;  ///< A X W1
  DenseMatrix ah1;     ///< A ReLU(h1_pre)
  DenseMatrix mu;      ///< VGAE mean head
  DenseMatrix logvar;  ///< VGAE log-variance head
  DenseMatrix eps;     ///< VGAE noise; empty in eval mode
  DenseMatrix z;
};

/// Upstream gradients at the encoder outputs. Empty matrices count as zero.
struct HeadGrads {
  DenseMatrix z;
  DenseMatrix mu;      ///< VGAE only, added to the path through z
  DenseMatrix logvar;  ///< VGAE only
};

/// One gradient matrix per encoder weight, in GaeModel::weights() order.
struct ThetaGrad {
  std::vector<DenseMatrix> parts;

  std::vector<double> flatten() const;
  ThetaGrad& operator+=(const ThetaGrad& other);
};

/// Two-layer GCN auto-encoder. GAE/DGAE: W1 (J x h), W2 (h x d).
/// VGAE: W1, W_mu (h x d), W_logvar (h x d). DGAE also owns K x d centres.
class GaeModel {
 public:
  GaeModel() = default;
  GaeModel(Arch arch, std::size_t input_dim, std::uint64_t seed, AdamConfig adam = {}, std::size_t hidden_dim = 32,
           std::size_t embed_dim = 16);

  Arch arch() const noexcept { return arch_; }
  std::size_t input_dim() const noexcept { return input_dim_; }
  std::size_t hidden_dim() const noexcept { return hidden_dim_; }
  std::size_t embed_dim() const noexcept { return embed_dim_; }
  std::uint64_t seed() const noexcept { return seed_; }

  const std::vector<DenseMatrix>& weights() const noexcept { return weights_; }
  std::vector<std::string> weight_names() const;
  /// Replaces the weights (shapes must match) and invalidates caches.
  void set_weights(std::vector<DenseMatrix> weights);

  std::size_t theta_size() const;
  std::vector<double> flat_theta() const;
  void set_flat_theta(std::span<const double> theta);

  bool has_centers() const noexcept { return !centers_.empty(); }
  const DenseMatrix& centers() const noexcept { return centers_; }
  void set_centers(DenseMatrix centers);

  /// Bumped on every parameter change.
  std::uint64_t version() const noexcept { return version_; }

  const AdamConfig& adam_config() const noexcept { return adam_; }
  /// Resets the optimiser moments (e.g. between pretraining and clustering).
  void reset_optimizer();

  EncoderCache encode(const EncoderInput& input, EncodeMode mode);
  /// Deterministic forward pass (VGAE: Z = mu), usable for backprop.
  EncoderCache encode_eval(const EncoderInput& input) const;
  /// Z without touching the noise stream (VGAE returns mu).
  DenseMatrix embed(const EncoderInput& input) const;

  /// Chain rule through the encoder. StateError if the cache predates the
  /// current parameters.
  ThetaGrad backprop_theta(const EncoderCache& cache, const HeadGrads& grads) const;

  /// One Adam step on every weight (and on the centres when centre_grad is
  /// non-empty).
  void apply_gradients(const ThetaGrad& grad, const DenseMatrix& center_grad = {});

  nlohmann::json to_json() const;
  static GaeModel from_json(const nlohmann::json& j);
  /// Atomic write (temporary file + rename).
  void save(const std::filesystem::path& path) const;
  static GaeModel load(const std::filesystem::path& path);

  bool operator==(const GaeModel& other) const;

 private:
  void forward(const EncoderInput& input, EncoderCache& cache) const;

  Arch arch_ = Arch::gae;
  std::size_t input_dim_ = 0;
  std::size_t hidden_dim_ = 32;
  std::size_t embed_dim_ = 16;
  std::uint64_t seed_ = 0;
  AdamConfig adam_;
  std::vector<DenseMatrix> weights_;
  std::vector<AdamState> weight_states_;
  DenseMatrix centers_;
  AdamState center_state_;
  Rng rng_{0};
  std::uint64_t version_ = 1;
};

/// FNV-1a over the architecture tag and weight bits.
std::uint64_t weights_hash(const GaeModel& model);

}  // namespace rgae
