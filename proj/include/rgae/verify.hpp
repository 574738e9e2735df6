#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace rgae {

struct IdentityReport {
  std::size_t instances = 0;
  double max_bce_split = 0.0;
  double max_kmeans_graph = 0.0;
  double max_combined = 0.0;
  double seconds = 0.0;
};

/// Random (Z, A, labels) instances with N <= 30, d <= 8, K <= 5; largest
/// relative residual of each loss identity.
IdentityReport run_identity_suite(std::size_t instances, std::uint64_t seed);

struct GradientCheck {
  std::string name;
  double rel_error = 0.0;
};

struct GradientReport {
  std::vector<GradientCheck> checks;
  double seconds = 0.0;
  double max_error() const;
};

/// Closed-form gradients against central differences on random instances
/// with N <= 10. `rounds` independent instances per check.
GradientReport run_gradient_suite(std::size_t rounds, std::uint64_t seed);

}  // namespace rgae
