#include "rgae/optim.hpp"

#include <cmath>

#include "rgae/errors.hpp"

namespace rgae {

void adam_step(AdamState& state, DenseMatrix& params, const DenseMatrix& grads) {
  if (params.rows() != grads.rows() || params.cols() != grads.cols() ||
      state.first_moment.rows() != params.rows() || state.first_moment.cols() != params.cols())
    throw ShapeError("adam_step: parameter, gradient and moment shapes differ");
  if (!grads.all_finite()) throw NumericsError("adam_step: non-finite gradient");

  const AdamConfig& cfg = state.config;
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(cfg.beta1, t);
  const double bias2 = 1.0 - std::pow(cfg.beta2, t);

  auto p = params.values();
  auto g = grads.values();
  auto m = state.first_moment.values();
  auto v = state.second_moment.values();
  for (std::size_t k = 0; k < p.size(); ++k) {
    m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g[k];
    v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g[k] * g[k];
    const double m_hat = m[k] / bias1;
    const double v_hat = v[k] / bias2;
    p[k] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
  }
}

}  // namespace rgae
