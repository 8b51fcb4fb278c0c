#pragma once

#include "lagma/envs/env.hpp"

namespace lagma::envs {

/// Deterministic chain used as an exhaustively solvable reference task.
///
/// All agents start at cell 0; the goal is cell L-1. Actions: 0 left,
/// 1 stay, 2 right. An agent that reaches the goal earns target_reward once and
/// stays there; when every agent is at the goal the episode ends with
/// win_reward. The global state is the normalised agent positions followed by
/// the normalised timestep, so distinct (positions, t) pairs never collide.
class CorridorEnv final : public Environment {
 public:
  static constexpr int kLeft = 0;
  static constexpr int kStay = 1;
  static constexpr int kRight = 2;

  explicit CorridorEnv(EnvSpec spec);

  EnvState reset(std::uint64_t seed) const override;
  StepOutcome step(EnvState& state, std::span<const int> actions) const override;
  std::vector<double> global_state(const EnvState& state) const override;
  std::vector<double> observation(const EnvState& state, std::size_t agent) const override;
  std::vector<int> available_actions(const EnvState& state, std::size_t agent) const override;

  std::size_t state_dim() const override { return spec().n_agents + 1; }
  std::size_t obs_dim() const override { return 3; }
  std::size_t n_actions() const override { return 3; }
  double max_return() const override;

  int goal() const { return static_cast<int>(spec().corridor_length) - 1; }
  /// Number of distinct (positions, timestep) configurations.
  std::size_t joint_state_count() const;
};

}  // namespace lagma::envs
