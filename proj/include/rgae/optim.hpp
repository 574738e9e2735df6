#pragma once

#include <cstdint>

#include "rgae/dense.hpp"

namespace rgae {

struct AdamConfig {
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  bool operator==(const AdamConfig&) const = default;
};

/// Moment buffers for one parameter matrix.
struct AdamState {
  AdamConfig config;
  DenseMatrix first_moment;
  DenseMatrix second_moment;
  std::uint64_t step = 0;

  AdamState() = default;
  AdamState(AdamConfig cfg, std::size_t rows, std::size_t cols)
      : config(cfg), first_moment(rows, cols), second_moment(rows, cols) {}

  bool operator==(const AdamState&) const = default;
};

/// One bias-corrected Adam update of `params` in place. Throws NumericsError
/// on non-finite gradients (params untouched) and ShapeError on mismatch.
void adam_step(AdamState& state, DenseMatrix& params, const DenseMatrix& grads);

}  // namespace rgae
