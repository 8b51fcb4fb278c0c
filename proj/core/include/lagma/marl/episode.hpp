#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <random>
#include <span>
#include <vector>

#include "lagma/autodiff/params.hpp"
#include "lagma/envs/env.hpp"
#include "lagma/marl/agent_net.hpp"

namespace lagma::marl {

/// One complete episode with L transitions and L + 1 states. Per-state
/// arrays (states, obs, avail) include the final state.
struct Episode {
  std::size_t n_agents = 0;
  std::size_t obs_dim = 0;
  std::size_t state_dim = 0;
  std::size_t n_actions = 0;

  std::uint64_t env_seed = 0;
  std::vector<double> states;        // [(L+1), state_dim]
  std::vector<double> obs;           // [(L+1), n_agents, obs_dim]
  std::vector<std::uint8_t> avail;   // [(L+1), n_agents, n_actions]
  std::vector<int> actions;          // [L, n_agents]
  std::vector<double> rewards;       // [L]
  /// Ended by the task (win or all agents disabled), not by the time limit.
  bool terminated = false;
  bool won = false;

  std::size_t length() const { return rewards.size(); }
  double total_reward() const;
  std::span<const double> state(std::size_t t) const;
  std::span<const double> observation(std::size_t t, std::size_t agent) const;
  std::span<const std::uint8_t> available(std::size_t t, std::size_t agent) const;
  /// Discounted return from every non-final state.
  std::vector<double> discounted_returns(double gamma) const;
};

/// Steps an environment with a recurrent policy and epsilon-greedy actions.
Episode run_episode(const envs::Environment& env, const AgentNet& net, const ad::ParamSet& params,
                    std::uint64_t env_seed, double epsilon, std::mt19937_64& rng);

/// Rebuilds an episode from its seed and joint actions.
Episode replay_episode(const envs::Environment& env, std::uint64_t env_seed,
                       std::span<const int> actions);

/// FIFO store of complete episodes.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 5000);

  void push(Episode episode);
  /// `count` distinct episodes drawn uniformly (count <= size()).
  std::vector<const Episode*> sample(std::size_t count, std::mt19937_64& rng) const;

  std::size_t size() const { return episodes_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Episode& at(std::size_t i) const { return episodes_.at(i); }
  void clear() { episodes_.clear(); }

 private:
  std::size_t capacity_;
  std::deque<Episode> episodes_;
};

}  // namespace lagma::marl
