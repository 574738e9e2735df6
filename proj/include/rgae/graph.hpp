#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rgae/dense.hpp"
#include "rgae/sparse.hpp"

namespace rgae {

/// Cluster or class index per node. Negative entries mean "unassigned" where
/// a routine documents that it accepts them.
using Labels = std::vector<int>;

/// Undirected edge stored with u < v.
struct Edge {
  std::size_t u;
  std::size_t v;
  auto operator<=>(const Edge&) const = default;
};

/// Undirected attributed graph. Immutable after construction.
///
/// Edges may be given in any orientation and with repeats; they are stored
/// once each as (min, max). Self-loops, out-of-range endpoints, non-finite
/// features, a feature row count other than N and labels >= k_clusters are
/// rejected with DataError.
class AttributedGraph {
 public:
  AttributedGraph() = default;
  AttributedGraph(std::size_t n_nodes, std::vector<Edge> edges, DenseMatrix features,
                  std::optional<Labels> labels, std::size_t k_clusters, std::string name = {});

  std::size_t n_nodes() const noexcept { return n_nodes_; }
  std::size_t k_clusters() const noexcept { return k_clusters_; }
  const std::string& name() const noexcept { return name_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const DenseMatrix& features() const noexcept { return features_; }
  const std::optional<Labels>& labels() const noexcept { return labels_; }
  bool has_labels() const noexcept { return labels_.has_value(); }

  /// Binary symmetric adjacency without self-loops.
  const SparseMatrix& adjacency() const noexcept { return adjacency_; }
  std::vector<std::size_t> degrees() const;

  AttributedGraph with_features(DenseMatrix features) const;
  AttributedGraph with_edges(std::vector<Edge> edges) const;

 private:
  std::size_t n_nodes_ = 0;
  std::vector<Edge> edges_;
  DenseMatrix features_;
  std::optional<Labels> labels_;
  std::size_t k_clusters_ = 0;
  std::string name_;
  SparseMatrix adjacency_;
};

/// Binary symmetric adjacency built from an undirected edge list.
SparseMatrix adjacency_from_edges(std::size_t n_nodes, const std::vector<Edge>& edges);

enum class AdjacencyMode {
  /// D~^-1/2 (A + I) D~^-1/2, the GCN propagation filter
  propagation,
  /// D^-1/2 A D^-1/2 without self-loops; isolated nodes give zero rows
  target,
};

struct NormalizedAdjacency {
  SparseMatrix matrix;
  AdjacencyMode mode = AdjacencyMode::target;
};

NormalizedAdjacency normalize_adjacency(const SparseMatrix& adjacency, AdjacencyMode mode);
NormalizedAdjacency normalize_adjacency(const AttributedGraph& graph, AdjacencyMode mode);

/// One-hot encoding of node degree; one column per distinct degree, columns
/// ordered by increasing degree.
DenseMatrix degree_onehot_features(const AttributedGraph& graph);
DenseMatrix degree_onehot_features(std::size_t n_nodes, const std::vector<Edge>& edges);

/// Scales each nonzero row to unit L2 norm. Throws DataError on NaN.
DenseMatrix row_normalize(const DenseMatrix& features);

// ---- dataset directory format -------------------------------------------
//
//   edges.tsv     one "u<TAB>v" pair per line, 0-based (any whitespace accepted)
//   features.tsv  optional; N lines of J space-separated decimals
//   labels.tsv    optional; N lines, one integer each
//   meta.json     {"n_nodes": N, "k_clusters": K, "dataset_name": "..."}

/// Throws FormatError for malformed files, out-of-range indices, self-loops
/// and out-of-range labels. Missing features.tsv yields degree one-hot features.
AttributedGraph load_dataset(const std::filesystem::path& dir);
void save_dataset(const AttributedGraph& graph, const std::filesystem::path& dir);

// ---- perturbations -------------------------------------------------------

enum class PerturbKind { add_random_edges, drop_random_edges, feature_gaussian_noise, drop_feature_columns };

struct PerturbSpec {
  PerturbKind kind = PerturbKind::add_random_edges;
  /// edge/column count, or the noise standard deviation
  double amount = 0.0;

  /// "add_edges:400", "drop_edges:200", "noise:0.1", "drop_features:50"
  static PerturbSpec parse(const std::string& text);
  std::string to_string() const;
};

/// Deterministic given the seed. Added edges are drawn uniformly without
/// replacement from the non-edges; dropped feature columns are zeroed.
/// Throws RangeError when the request exceeds the available candidates.
AttributedGraph perturb_graph(const AttributedGraph& graph, const PerturbSpec& spec, std::uint64_t seed);

/// FNV-1a over node count, edges, feature bits and labels.
std::uint64_t content_hash(const AttributedGraph& graph);

}  // namespace rgae
