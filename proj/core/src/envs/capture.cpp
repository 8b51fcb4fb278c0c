#include "lagma/envs/capture.hpp"

#include <algorithm>
#include <cstdlib>
#include <random>

#include "lagma/common/error.hpp"

namespace lagma::envs {

namespace {

constexpr int kDx[] = {0, 0, -1, 1, 0, 0};
constexpr int kDy[] = {-1, 1, 0, 0, 0, 0};

bool adjacent(Cell a, Cell b) { return std::abs(a.x - b.x) + std::abs(a.y - b.y) == 1; }

}  // namespace

CaptureEnv::CaptureEnv(EnvSpec spec) : Environment(std::move(spec)) {
  this->spec().validate();
  if (this->spec().kind != EnvKind::kCapture) throw ConfigError("CaptureEnv: wrong env kind");
}

bool CaptureEnv::in_bounds(Cell c) const {
  return c.x >= 0 && c.y >= 0 && c.x < static_cast<int>(spec().width) &&
         c.y < static_cast<int>(spec().height);
}

EnvState CaptureEnv::reset(std::uint64_t seed) const {
  const EnvSpec& s = spec();
  std::vector<Cell> cells;
  cells.reserve(s.width * s.height);
  for (std::size_t y = 0; y < s.height; ++y) {
    for (std::size_t x = 0; x < s.width; ++x) {
      cells.push_back({static_cast<int>(x), static_cast<int>(y)});
    }
  }
  std::mt19937_64 rng(seed);
  std::shuffle(cells.begin(), cells.end(), rng);

  EnvState st;
  auto it = cells.begin();
  st.agents.assign(it, it + static_cast<std::ptrdiff_t>(s.n_agents));
  it += static_cast<std::ptrdiff_t>(s.n_agents);
  st.targets.assign(it, it + static_cast<std::ptrdiff_t>(s.n_targets));
  it += static_cast<std::ptrdiff_t>(s.n_targets);
  st.hazards.assign(it, it + static_cast<std::ptrdiff_t>(s.hazard_cells));
  st.agent_active.assign(s.n_agents, true);
  st.target_alive.assign(s.n_targets, true);
  return st;
}

bool CaptureEnv::adjacent_to_live_target(const EnvState& state, std::size_t agent) const {
  for (std::size_t t = 0; t < state.targets.size(); ++t) {
    if (state.target_alive[t] && adjacent(state.agents[agent], state.targets[t])) return true;
  }
  return false;
}

StepOutcome CaptureEnv::step(EnvState& state, std::span<const int> actions) const {
  check_actions(state, actions);
  const EnvSpec& s = spec();
  const std::size_t n = s.n_agents;

  auto blocked_by_target = [&](Cell c) {
    for (std::size_t t = 0; t < state.targets.size(); ++t) {
      if (state.target_alive[t] && state.targets[t] == c) return true;
    }
    return false;
  };

  std::vector<Cell> intended = state.agents;
  for (std::size_t i = 0; i < n; ++i) {
    if (!state.agent_active[i]) continue;
    const int a = actions[i];
    const Cell next{state.agents[i].x + kDx[a], state.agents[i].y + kDy[a]};
    if (next == state.agents[i] || !in_bounds(next) || blocked_by_target(next)) continue;
    bool occupied = false;
    for (std::size_t j = 0; j < n; ++j) occupied = occupied || (j != i && state.agents[j] == next);
    if (!occupied) intended[i] = next;
  }
  // Two agents entering the same cell both stay put.
  std::vector<Cell> moved = intended;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j && intended[i] == intended[j]) moved[i] = state.agents[i];
    }
  }
  state.agents = moved;

  StepOutcome out;
  for (std::size_t i = 0; i < n; ++i) {
    if (!state.agent_active[i]) continue;
    for (const Cell& h : state.hazards) {
      if (state.agents[i] == h) {
        state.agent_active[i] = false;
        out.reward += s.disable_penalty;
      }
    }
  }

  for (std::size_t t = 0; t < state.targets.size(); ++t) {
    if (!state.target_alive[t]) continue;
    std::size_t near = 0;
    bool pressed = s.auto_capture;
    for (std::size_t i = 0; i < n; ++i) {
      if (state.agent_active[i] && adjacent(state.agents[i], state.targets[t])) {
        ++near;
        pressed = pressed || actions[i] == kCapture;
      }
    }
    if (near >= s.capture_agents && pressed) {
      state.target_alive[t] = false;
      out.reward += s.target_reward;
    }
  }

  const bool all_captured =
      std::none_of(state.target_alive.begin(), state.target_alive.end(), [](bool b) { return b; });
  const bool all_disabled =
      std::none_of(state.agent_active.begin(), state.agent_active.end(), [](bool b) { return b; });
  state.timestep += 1;
  if (all_captured) {
    out.reward += s.win_reward;
    out.won = true;
    out.terminated = true;
  } else if (all_disabled) {
    out.terminated = true;
  } else if (state.timestep >= s.episode_limit) {
    out.terminated = true;
    out.truncated = true;
  }
  state.cumulative_reward += out.reward;
  state.terminated = out.terminated;
  state.won = out.won;
  return out;
}

std::vector<double> CaptureEnv::global_state(const EnvState& state) const {
  const EnvSpec& s = spec();
  const double sx = s.width > 1 ? 1.0 / static_cast<double>(s.width - 1) : 0.0;
  const double sy = s.height > 1 ? 1.0 / static_cast<double>(s.height - 1) : 0.0;
  std::vector<double> out;
  out.reserve(state_dim());
  for (std::size_t i = 0; i < s.n_agents; ++i) {
    out.push_back(state.agents[i].x * sx);
    out.push_back(state.agents[i].y * sy);
    out.push_back(state.agent_active[i] ? 1.0 : 0.0);
  }
  for (std::size_t t = 0; t < s.n_targets; ++t) {
    out.push_back(state.targets[t].x * sx);
    out.push_back(state.targets[t].y * sy);
    out.push_back(state.target_alive[t] ? 1.0 : 0.0);
  }
  out.push_back(static_cast<double>(state.timestep) / static_cast<double>(s.episode_limit));
  return out;
}

std::size_t CaptureEnv::state_dim() const { return 3 * spec().n_agents + 3 * spec().n_targets + 1; }

std::size_t CaptureEnv::obs_dim() const { return window() * window() * obs_channels() + 2; }

std::vector<double> CaptureEnv::observation(const EnvState& state, std::size_t agent) const {
  const EnvSpec& s = spec();
  const std::size_t w = window();
  const std::size_t ch = obs_channels();
  std::vector<double> obs(obs_dim(), 0.0);
  if (!state.agent_active[agent]) return obs;
  const Cell me = state.agents[agent];
  const int r = static_cast<int>(s.obs_radius);
  auto cell_index = [&](Cell c) -> long {
    const int dx = c.x - me.x + r;
    const int dy = c.y - me.y + r;
    if (dx < 0 || dy < 0 || dx >= static_cast<int>(w) || dy >= static_cast<int>(w)) return -1;
    return static_cast<long>((static_cast<std::size_t>(dy) * w + static_cast<std::size_t>(dx)) * ch);
  };
  for (std::size_t j = 0; j < s.n_agents; ++j) {
    if (j == agent) continue;
    if (const long k = cell_index(state.agents[j]); k >= 0) obs[static_cast<std::size_t>(k)] = 1.0;
  }
  for (std::size_t t = 0; t < state.targets.size(); ++t) {
    if (!state.target_alive[t]) continue;
    if (const long k = cell_index(state.targets[t]); k >= 0) obs[static_cast<std::size_t>(k) + 1] = 1.0;
  }
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      const Cell c{me.x + dx, me.y + dy};
      const auto k = static_cast<std::size_t>(cell_index(c));
      if (!in_bounds(c)) obs[k + 2] = 1.0;
    }
  }
  if (ch == 4) {
    for (const Cell& h : state.hazards) {
      if (const long k = cell_index(h); k >= 0) obs[static_cast<std::size_t>(k) + 3] = 1.0;
    }
  }
  obs[w * w * ch] = s.width > 1 ? me.x / static_cast<double>(s.width - 1) : 0.0;
  obs[w * w * ch + 1] = s.height > 1 ? me.y / static_cast<double>(s.height - 1) : 0.0;
  return obs;
}

std::vector<int> CaptureEnv::available_actions(const EnvState& state, std::size_t agent) const {
  if (!state.agent_active[agent]) return {0, 0, 0, 0, 1, 0};
  const int capture = adjacent_to_live_target(state, agent) ? 1 : 0;
  return {1, 1, 1, 1, 1, capture};
}

double CaptureEnv::max_return() const {
  return static_cast<double>(spec().n_targets) * spec().target_reward + spec().win_reward;
}

}  // namespace lagma::envs
