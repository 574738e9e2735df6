#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rgae/dense.hpp"
#include "rgae/graph.hpp"
#include "rgae/rng.hpp"

namespace rgae::test {

inline DenseMatrix random_matrix(Rng& rng, std::size_t r, std::size_t c, double scale = 1.0) {
  DenseMatrix m(r, c);
  for (double& v : m.values()) v = scale * rng.normal();
  return m;
}

inline std::vector<Edge> random_edges(Rng& rng, std::size_t n, double p) {
  std::vector<Edge> e;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (rng.uniform() < p) e.push_back({i, j});
  return e;
}

inline Labels random_labels(Rng& rng, std::size_t n, std::size_t k) {
  Labels l(n);
  for (auto& v : l) v = static_cast<int>(rng.below(k));
  return l;
}

/// Planted partition: k equal communities, edge probability p_in inside and
/// p_out across, degree one-hot features.
inline AttributedGraph planted_partition(std::size_t n, std::size_t k, double p_in, double p_out, std::uint64_t seed) {
  Rng rng(seed);
  Labels labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i * k / n);
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (rng.uniform() < (labels[i] == labels[j] ? p_in : p_out)) edges.push_back({i, j});
  return AttributedGraph(n, edges, degree_onehot_features(n, edges), labels, k, "planted");
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("rgae-test-" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace rgae::test
