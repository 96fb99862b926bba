#include "cosmig/optim.hpp"

#include <cmath>

#include "cosmig/error.hpp"

namespace cosmig {

void adam_step(ParamStore& params, OptimizerState& state) {
  for (const auto& [name, p] : params) {
    if (!p.has_grad()) throw Error("adam_step: parameter '" + name + "' has no gradient");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);

  for (auto& [name, p] : params) {
    auto& m = state.moments[name];
    if (m.first.size() != p.size()) {
      m.first.assign(p.size(), 0.0);
      m.second.assign(p.size(), 0.0);
    }
    auto values = p.mutable_values();
    const auto grad = p.grad();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double g = grad[i];
      m.first[i] = state.beta1 * m.first[i] + (1.0 - state.beta1) * g;
      m.second[i] = state.beta2 * m.second[i] + (1.0 - state.beta2) * g * g;
      const double m_hat = m.first[i] / correction1;
      const double v_hat = m.second[i] / correction2;
      values[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

}  // namespace cosmig
