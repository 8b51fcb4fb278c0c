#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace lagma::envs {

enum class EnvKind { kCapture, kCorridor };

/// Static description of a cooperative environment.
struct EnvSpec {
  EnvKind kind = EnvKind::kCapture;
  std::size_t n_agents = 2;
  std::size_t width = 7;
  std::size_t height = 7;
  std::size_t n_targets = 2;
  std::size_t obs_radius = 2;
  std::size_t episode_limit = 50;
  /// Agents that must be adjacent to a target for a capture to succeed.
  std::size_t capture_agents = 2;
  /// Capture without anyone playing the capture action.
  bool auto_capture = false;
  /// Cells that disable an agent stepping on them (and cost disable_penalty).
  std::size_t hazard_cells = 0;
  double target_reward = 10.0;
  double win_reward = 200.0;
  double disable_penalty = -5.0;
  /// Number of cells of the Corridor chain.
  std::size_t corridor_length = 6;

  void validate() const;
};

std::string to_string(EnvKind kind);
EnvKind env_kind_from_string(const std::string& name);

struct Cell {
  int x = 0;
  int y = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

/// Full simulator state; copyable so that oracles can branch on it.
struct EnvState {
  std::vector<Cell> agents;
  std::vector<bool> agent_active;
  std::vector<Cell> targets;
  std::vector<bool> target_alive;
  std::vector<Cell> hazards;
  std::size_t timestep = 0;
  double cumulative_reward = 0.0;
  bool terminated = false;
  bool won = false;

  friend bool operator==(const EnvState&, const EnvState&) = default;
};

struct StepOutcome {
  double reward = 0.0;
  bool terminated = false;
  /// Terminated because the episode limit was hit rather than by the task.
  bool truncated = false;
  bool won = false;
};

/// Dec-POMDP simulator interface. Implementations are stateless apart from
/// the spec, so one instance may serve many EnvState values.
class Environment {
 public:
  explicit Environment(EnvSpec spec) : spec_(std::move(spec)) {}
  virtual ~Environment() = default;

  const EnvSpec& spec() const { return spec_; }
  std::size_t n_agents() const { return spec_.n_agents; }
  std::size_t episode_limit() const { return spec_.episode_limit; }

  virtual EnvState reset(std::uint64_t seed) const = 0;
  /// Advances `state` in place. Throws on a terminated state or bad action.
  virtual StepOutcome step(EnvState& state, std::span<const int> actions) const = 0;

  virtual std::vector<double> global_state(const EnvState& state) const = 0;
  virtual std::vector<double> observation(const EnvState& state, std::size_t agent) const = 0;
  virtual std::vector<int> available_actions(const EnvState& state, std::size_t agent) const = 0;

  virtual std::size_t state_dim() const = 0;
  virtual std::size_t obs_dim() const = 0;
  virtual std::size_t n_actions() const = 0;
  /// Largest attainable undiscounted episode return.
  virtual double max_return() const = 0;

 protected:
  void check_actions(const EnvState& state, std::span<const int> actions) const;

 private:
  EnvSpec spec_;
};

std::unique_ptr<Environment> make_environment(const EnvSpec& spec);

/// True iff the undiscounted reward sum equals the environment's maximum return.
bool goal_reached(std::span<const double> rewards, const Environment& env);

}  // namespace lagma::envs
