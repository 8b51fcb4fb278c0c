#pragma once

#include "lagma/envs/env.hpp"

namespace lagma::envs {

/// Cooperative capture gridworld with static targets and sparse rewards.
///
/// Actions: 0 up, 1 down, 2 left, 3 right, 4 stay, 5 capture. Moves are
/// simultaneous; a move into a wall, a live target, a cell occupied before the
/// move, or a cell another agent also enters is cancelled. After moving, a
/// live target with at least `capture_agents` active agents 4-adjacent to it is
/// captured when one of them played capture (or always, with auto_capture).
///
/// Observation of an agent: a (2r+1)^2 window centred on the agent with
/// channels {other agents, live targets, outside the grid} plus a hazard
/// channel when hazards are enabled, followed by its normalised (x, y).
///
/// Global state: normalised (x, y) and active flag of every agent, (x, y) and
/// alive flag of every target, then timestep / episode_limit.
class CaptureEnv final : public Environment {
 public:
  static constexpr int kUp = 0;
  static constexpr int kDown = 1;
  static constexpr int kLeft = 2;
  static constexpr int kRight = 3;
  static constexpr int kStay = 4;
  static constexpr int kCapture = 5;

  explicit CaptureEnv(EnvSpec spec);

  EnvState reset(std::uint64_t seed) const override;
  StepOutcome step(EnvState& state, std::span<const int> actions) const override;
  std::vector<double> global_state(const EnvState& state) const override;
  std::vector<double> observation(const EnvState& state, std::size_t agent) const override;
  std::vector<int> available_actions(const EnvState& state, std::size_t agent) const override;

  std::size_t state_dim() const override;
  std::size_t obs_dim() const override;
  std::size_t n_actions() const override { return 6; }
  double max_return() const override;

  std::size_t obs_channels() const { return spec().hazard_cells > 0 ? 4 : 3; }
  std::size_t window() const { return 2 * spec().obs_radius + 1; }

 private:
  bool in_bounds(Cell c) const;
  bool adjacent_to_live_target(const EnvState& state, std::size_t agent) const;
};

}  // namespace lagma::envs
