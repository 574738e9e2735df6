#pragma once

#include <algorithm>
#include <cmath>

#include "rgae/kernels.hpp"

namespace rgae::detail {

/// Loss contribution and d(loss)/d(logit) for one (i, j) pair.
struct PairTerm {
  double loss;
  double dlogit;
};

inline PairTerm bce_pair(double logit, double target, BceWeighting weighting, double pos_weight) {
  const double e = std::exp(-std::abs(logit));
  const double softplus = std::max(logit, 0.0) + std::log1p(e);  // log(1 + exp(logit))
  const double sig = logit >= 0.0 ? 1.0 / (1.0 + e) : e / (1.0 + e);
  if (weighting == BceWeighting::plain) return {softplus - target * logit, sig - target};
  // softplus(-logit) = softplus(logit) - logit
  return {pos_weight * target * (softplus - logit) + (1.0 - target) * softplus,
          pos_weight * target * (sig - 1.0) + (1.0 - target) * sig};
}

inline double bce_scale(BceWeighting weighting, std::size_t n, double norm) {
  if (weighting == BceWeighting::plain) return 1.0;
  const double nn = static_cast<double>(n) * static_cast<double>(n);
  return norm / nn;
}

}  // namespace rgae::detail
