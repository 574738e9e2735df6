#pragma once

#include <cstddef>
#include <filesystem>
#include <limits>
#include <optional>
#include <vector>

#include "rgae/clustering.hpp"
#include "rgae/dense.hpp"
#include "rgae/graph.hpp"
#include "rgae/sparse.hpp"

namespace rgae {

/// Nodes whose assignment is confident enough to act on.
struct ReliableSet {
  std::vector<std::size_t> omega;  ///< sorted
  std::vector<bool> member;        ///< length N
  std::vector<double> lambda1;     ///< top score per node
  std::vector<double> lambda2;     ///< runner-up score per node
  double alpha1 = 0.0;
  double alpha2 = 0.0;

  std::size_t size() const noexcept { return omega.size(); }
  bool empty() const noexcept { return omega.empty(); }
  bool contains(std::size_t i) const noexcept { return i < member.size() && member[i]; }
};

/// Every node, with no confidence scores.
ReliableSet all_nodes(std::size_t n);
/// Explicit node list (sorted and deduplicated).
ReliableSet reliable_from(std::size_t n, std::vector<std::size_t> nodes);

/// Top score and the largest score strictly below it. A constant row gets
/// lambda2 = lambda1.
std::pair<double, double> top_two(std::span<const double> row);

/// Operator Xi. When P is hard (one-hot) the confidences come from
/// gaussian_soft_assign(Z, *model); otherwise P is used as is. alpha2
/// defaults to alpha1 / 2. RangeError when K < 2; StateError when P is hard
/// and no model is supplied.
ReliableSet xi_select(const DenseMatrix& z, const SoftAssignment& p, const ClusterModel* model, double alpha1,
                      std::optional<double> alpha2 = std::nullopt);

inline constexpr std::size_t kAbsentCentroid = std::numeric_limits<std::size_t>::max();

struct CentroidNodes {
  /// One node per cluster, or kAbsentCentroid when the cluster has no reliable member.
  std::vector<std::size_t> pi;
};

/// Pi[k] = member of Omega nearest to the mean embedding of the Omega nodes
/// labelled k (ties to the lowest index). OperatorError when Omega is empty
/// or no cluster has a reliable member.
CentroidNodes compute_centroid_nodes(const DenseMatrix& z, const Labels& labels, const ReliableSet& omega,
                                     std::size_t k);

enum class EdgeOrigin : char { original = 'O', added = 'A' };

/// Rewritten self-supervision graph with per-edge provenance.
struct SelfSupervisionGraph {
  SparseMatrix adjacency;          ///< binary, symmetric
  std::vector<Edge> edges;         ///< u < v, sorted
  std::vector<EdgeOrigin> origin;  ///< parallel to edges
  std::vector<Edge> deleted;       ///< original edges removed, sorted

  std::size_t n_added() const;
  /// "u<TAB>v<TAB>O|A" per edge, plus "<path>.deleted" with "u<TAB>v" lines.
  void save(const std::filesystem::path& path) const;
  static SelfSupervisionGraph load(const std::filesystem::path& path, std::size_t n_nodes);
};

/// The original graph with every edge tagged original.
SelfSupervisionGraph unchanged_graph(const AttributedGraph& graph);
SelfSupervisionGraph unchanged_graph(std::size_t n_nodes, const std::vector<Edge>& edges);

struct UpsilonOptions {
  bool add_edges = true;
  bool drop_edges = true;
};

/// Operator Upsilon: rebuilds from the original edges, links each reliable
/// node to its cluster's centroid node (when that node agrees on the
/// cluster) and removes original edges between reliable nodes of different
/// clusters.
SelfSupervisionGraph upsilon_transform(std::size_t n_nodes, const std::vector<Edge>& edges, const Labels& labels,
                                       const ReliableSet& omega, const CentroidNodes& pi, UpsilonOptions opts = {});
SelfSupervisionGraph upsilon_transform(const AttributedGraph& graph, const SoftAssignment& p,
                                       const ReliableSet& omega, const CentroidNodes& pi, UpsilonOptions opts = {});

/// Upsilon over every node with the Hungarian-mapped ground truth; the
/// reference target for the feature-drift diagnostic.
SelfSupervisionGraph build_supervised_target(const AttributedGraph& graph, const Labels& truth, const Labels& pred,
                                             const DenseMatrix& z);

}  // namespace rgae
