#include "lagma/autodiff/optim.hpp"

#include <spdlog/spdlog.h>

#include <cmath>

#include "lagma/common/error.hpp"

namespace lagma::ad {

AdamState::AdamState(const ParamSet& params, AdamConfig cfg) : config(cfg) {
  if (!(cfg.step_size > 0.0)) throw Error("AdamState: step size must be positive");
  first.reserve(params.size());
  second.reserve(params.size());
  for (const auto& e : params.entries()) {
    first.emplace_back(e.value.rows(), e.value.cols());
    second.emplace_back(e.value.rows(), e.value.cols());
  }
}

AdamStepResult adam_step(ParamSet& params, AdamState& state) {
  if (state.first.size() != params.size()) {
    throw ShapeError("adam_step: optimizer state does not match parameter set");
  }
  AdamStepResult result;
  if (!params.grads_finite()) {
    spdlog::warn("adam_step: non-finite gradient, update skipped at step {}", state.step);
    return result;
  }
  const AdamConfig& c = state.config;
  result.grad_norm = params.grad_norm();
  double scale = 1.0;
  if (c.clip_norm > 0.0 && result.grad_norm > c.clip_norm) scale = c.clip_norm / result.grad_norm;

  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto w = params.value(p).data();
    auto g = params.grad(p).data();
    auto m = state.first[p].data();
    auto v = state.second[p].data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = g[i] * scale;
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * gi;
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * gi * gi;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      w[i] -= c.step_size * mhat / (std::sqrt(vhat) + c.epsilon);
    }
  }
  result.applied = true;
  return result;
}

}  // namespace lagma::ad
