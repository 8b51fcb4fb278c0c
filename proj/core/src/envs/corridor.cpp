#include "lagma/envs/corridor.hpp"

#include <algorithm>

#include "lagma/common/error.hpp"

namespace lagma::envs {

CorridorEnv::CorridorEnv(EnvSpec spec) : Environment(std::move(spec)) {
  this->spec().validate();
  if (this->spec().kind != EnvKind::kCorridor) throw ConfigError("CorridorEnv: wrong env kind");
}

EnvState CorridorEnv::reset(std::uint64_t /*seed*/) const {
  EnvState st;
  st.agents.assign(spec().n_agents, Cell{0, 0});
  st.agent_active.assign(spec().n_agents, true);
  return st;
}

StepOutcome CorridorEnv::step(EnvState& state, std::span<const int> actions) const {
  check_actions(state, actions);
  StepOutcome out;
  const int g = goal();
  for (std::size_t i = 0; i < spec().n_agents; ++i) {
    Cell& c = state.agents[i];
    if (c.x == g) continue;
    const int dx = actions[i] == kLeft ? -1 : (actions[i] == kRight ? 1 : 0);
    c.x = std::clamp(c.x + dx, 0, g);
    if (c.x == g) out.reward += spec().target_reward;
  }
  state.timestep += 1;
  const bool all_home = std::all_of(state.agents.begin(), state.agents.end(),
                                    [g](const Cell& c) { return c.x == g; });
  if (all_home) {
    out.reward += spec().win_reward;
    out.won = true;
    out.terminated = true;
  } else if (state.timestep >= spec().episode_limit) {
    out.terminated = true;
    out.truncated = true;
  }
  state.cumulative_reward += out.reward;
  state.terminated = out.terminated;
  state.won = out.won;
  return out;
}

std::vector<double> CorridorEnv::global_state(const EnvState& state) const {
  std::vector<double> out;
  out.reserve(state_dim());
  const double scale = 1.0 / static_cast<double>(goal());
  for (const Cell& c : state.agents) out.push_back(c.x * scale);
  out.push_back(static_cast<double>(state.timestep) / static_cast<double>(spec().episode_limit));
  return out;
}

std::vector<double> CorridorEnv::observation(const EnvState& state, std::size_t agent) const {
  const Cell c = state.agents[agent];
  return {c.x / static_cast<double>(goal()), c.x == goal() ? 1.0 : 0.0,
          static_cast<double>(state.timestep) / static_cast<double>(spec().episode_limit)};
}

std::vector<int> CorridorEnv::available_actions(const EnvState& /*state*/,
                                                std::size_t /*agent*/) const {
  return {1, 1, 1};
}

double CorridorEnv::max_return() const {
  return static_cast<double>(spec().n_agents) * spec().target_reward + spec().win_reward;
}

std::size_t CorridorEnv::joint_state_count() const {
  std::size_t positions = 1;
  for (std::size_t i = 0; i < spec().n_agents; ++i) positions *= spec().corridor_length;
  return positions * (spec().episode_limit + 1);
}

}  // namespace lagma::envs
