#include "lagma/envs/env.hpp"

#include <cmath>

#include "lagma/common/error.hpp"
#include "lagma/envs/capture.hpp"
#include "lagma/envs/corridor.hpp"

namespace lagma::envs {

void EnvSpec::validate() const {
  if (n_agents == 0) throw ConfigError("env: n_agents must be >= 1");
  if (episode_limit == 0) throw ConfigError("env: episode_limit must be >= 1");
  if (!std::isfinite(target_reward) || !std::isfinite(win_reward) ||
      !std::isfinite(disable_penalty)) {
    throw ConfigError("env: reward constants must be finite");
  }
  if (kind == EnvKind::kCapture) {
    if (width == 0 || height == 0) throw ConfigError("env: grid must be non-empty");
    if (n_targets == 0) throw ConfigError("env: capture needs at least one target");
    if (capture_agents == 0 || capture_agents > 4) {
      throw ConfigError("env: capture_agents must be in 1-4");
    }
    if (n_agents + n_targets + hazard_cells > width * height) {
      throw ConfigError("env: " + std::to_string(n_agents + n_targets + hazard_cells) +
                        " entities do not fit in " + std::to_string(width * height) + " cells");
    }
  } else {
    if (corridor_length < 2) throw ConfigError("env: corridor_length must be >= 2");
  }
}

std::string to_string(EnvKind kind) {
  return kind == EnvKind::kCapture ? "capture" : "corridor";
}

EnvKind env_kind_from_string(const std::string& name) {
  if (name == "capture") return EnvKind::kCapture;
  if (name == "corridor") return EnvKind::kCorridor;
  throw ConfigError("env: unknown kind '" + name + "' (expected capture or corridor)");
}

void Environment::check_actions(const EnvState& state, std::span<const int> actions) const {
  if (state.terminated) throw Error("step: environment state is already terminated");
  if (actions.size() != n_agents()) {
    throw Error("step: expected " + std::to_string(n_agents()) + " actions, got " +
                std::to_string(actions.size()));
  }
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (actions[i] < 0 || static_cast<std::size_t>(actions[i]) >= n_actions()) {
      throw Error("step: action " + std::to_string(actions[i]) + " of agent " +
                  std::to_string(i) + " out of range");
    }
  }
}

std::unique_ptr<Environment> make_environment(const EnvSpec& spec) {
  spec.validate();
  if (spec.kind == EnvKind::kCapture) return std::make_unique<CaptureEnv>(spec);
  return std::make_unique<CorridorEnv>(spec);
}

bool goal_reached(std::span<const double> rewards, const Environment& env) {
  double total = 0.0;
  for (double r : rewards) total += r;
  return total == env.max_return();
}

}  // namespace lagma::envs
