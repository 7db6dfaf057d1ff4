#include "cedl/optimizer.hpp"

#include <cmath>
#include <string>

#include "cedl/error.hpp"

namespace cedl {

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads) {
  if (params.size() != grads.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw Error(ErrorKind::Shape, "adam_step: params " + std::to_string(params.size()) +
                                      ", grads " + std::to_string(grads.size()) + ", state " +
                                      std::to_string(state.m.size()));
  }
  if (!all_finite(grads)) throw Error(ErrorKind::Gradient, "adam_step received a non-finite gradient");

  const auto& k = state.constants;
  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double correction1 = 1.0 - std::pow(k.beta1, t);
  const double correction2 = 1.0 - std::pow(k.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = k.beta1 * state.m[i] + (1.0 - k.beta1) * g;
    state.v[i] = k.beta2 * state.v[i] + (1.0 - k.beta2) * g * g;
    const double m_hat = state.m[i] / correction1;
    const double v_hat = state.v[i] / correction2;
    params[i] -= state.lr * m_hat / (std::sqrt(v_hat) + k.eps);
  }
}

void sgd_step(std::span<double> params, std::span<const double> grads, double lr) {
  if (params.size() != grads.size()) {
    throw Error(ErrorKind::Shape, "sgd_step: params " + std::to_string(params.size()) +
                                      ", grads " + std::to_string(grads.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * grads[i];
}

}  // namespace cedl
