#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "lagma/autodiff/optim.hpp"
#include "lagma/marl/agent_net.hpp"
#include "lagma/marl/episode.hpp"
#include "lagma/marl/mixer.hpp"

namespace lagma::marl {

struct LearnerConfig {
  double gamma = 0.99;
  /// Multiplies environment rewards everywhere the learner sees them.
  double reward_scale = 1.0;
  std::size_t batch_size = 32;
  std::size_t target_update_interval = 200;
  std::size_t replay_capacity = 5000;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  std::uint64_t epsilon_anneal_steps = 50000;
  /// Bootstrap with the target value of the online greedy joint action.
  bool double_q = false;
  std::size_t agent_hidden = 64;
  MixerKind mixer = MixerKind::kQmix;
  std::size_t mixer_embed = 32;
  std::size_t hypernet_hidden = 64;
  ad::AdamConfig optimizer;

  void validate() const;
};

struct EnvDims {
  std::size_t n_agents = 0;
  std::size_t obs_dim = 0;
  std::size_t state_dim = 0;
  std::size_t n_actions = 0;
};

/// Per episode, the bootstrap value of every state s_0 .. s_L: the target
/// mixer applied to the per-agent best available target action values.
using StateValues = std::vector<std::vector<double>>;

struct TdStats {
  double loss = 0.0;
  double mean_q = 0.0;
  double mean_target = 0.0;
  std::size_t valid_steps = 0;
};

struct TrainReport {
  TdStats td;
  double grad_norm = 0.0;
  bool applied = false;
  bool synced = false;
};

/// Agent network and mixer with target copies and their optimizer.
class Learner {
 public:
  Learner() = default;
  Learner(const EnvDims& dims, LearnerConfig config, std::uint64_t seed);

  StateValues target_values(std::span<const Episode* const> batch) const;

  /// Masked mean squared TD error. intrinsic[b][t] is added to the reward of
  /// transition t of episode b; an empty span means no intrinsic reward.
  ad::Var build_td_loss(ad::Tape& tape, std::span<const Episode* const> batch,
                        const StateValues& targets, std::span<const std::vector<double>> intrinsic,
                        TdStats* stats = nullptr);

  /// One optimizer step, then a hard target sync every target_update_interval steps.
  TrainReport train(std::span<const Episode* const> batch, const StateValues& targets,
                    std::span<const std::vector<double>> intrinsic);

  void sync_target();

  const LearnerConfig& config() const { return config_; }
  const EnvDims& dims() const { return dims_; }
  const AgentNet& agent() const { return agent_; }
  const Mixer& mixer() const { return mixer_; }
  ad::ParamSet& params() { return params_; }
  const ad::ParamSet& params() const { return params_; }
  ad::ParamSet& target_params() { return target_; }
  const ad::ParamSet& target_params() const { return target_; }
  ad::AdamState& optimizer() { return optim_; }
  const ad::AdamState& optimizer() const { return optim_; }
  std::uint64_t train_steps() const { return train_steps_; }
  void set_train_steps(std::uint64_t n) { train_steps_ = n; }

 private:
  struct Packed;
  Packed pack(std::span<const Episode* const> batch, std::size_t steps) const;

  EnvDims dims_;
  LearnerConfig config_;
  ad::ParamSet params_;
  ad::ParamSet target_;
  AgentNet agent_;
  Mixer mixer_;
  ad::AdamState optim_;
  std::uint64_t train_steps_ = 0;
};

}  // namespace lagma::marl
