#pragma once

#include <cstdint>
#include <vector>

#include "lagma/autodiff/params.hpp"

namespace lagma::ad {

struct AdamConfig {
  double step_size = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double epsilon = 1e-8;
  /// Global L2 gradient norm is clipped to this value before the update;
  /// non-positive disables clipping.
  double clip_norm = 10.0;
};

/// First/second moment estimates for every tensor of one ParamSet.
struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<Tensor> first;
  std::vector<Tensor> second;

  AdamState() = default;
  AdamState(const ParamSet& params, AdamConfig cfg);
};

struct AdamStepResult {
  bool applied = false;
  double grad_norm = 0.0;
};

/// One bias-corrected adaptive-moment update using params' accumulated
/// gradients. A non-finite gradient entry skips the whole step (parameters,
/// moments and step counter untouched) and logs a warning.
AdamStepResult adam_step(ParamSet& params, AdamState& state);

}  // namespace lagma::ad
