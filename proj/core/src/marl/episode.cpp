#include "lagma/marl/episode.hpp"

#include <numeric>

#include "lagma/common/error.hpp"
#include "lagma/marl/policy.hpp"

namespace lagma::marl {

double Episode::total_reward() const { return std::accumulate(rewards.begin(), rewards.end(), 0.0); }

std::span<const double> Episode::state(std::size_t t) const {
  return std::span<const double>(states).subspan(t * state_dim, state_dim);
}

std::span<const double> Episode::observation(std::size_t t, std::size_t agent) const {
  return std::span<const double>(obs).subspan((t * n_agents + agent) * obs_dim, obs_dim);
}

std::span<const std::uint8_t> Episode::available(std::size_t t, std::size_t agent) const {
  return std::span<const std::uint8_t>(avail).subspan((t * n_agents + agent) * n_actions, n_actions);
}

std::vector<double> Episode::discounted_returns(double gamma) const {
  std::vector<double> out(rewards.size());
  double acc = 0.0;
  for (std::size_t t = rewards.size(); t-- > 0;) {
    acc = rewards[t] + gamma * acc;
    out[t] = acc;
  }
  return out;
}

namespace {

void record_state(const envs::Environment& env, const envs::EnvState& st, Episode& ep) {
  const auto s = env.global_state(st);
  ep.states.insert(ep.states.end(), s.begin(), s.end());
  for (std::size_t i = 0; i < env.n_agents(); ++i) {
    const auto o = env.observation(st, i);
    ep.obs.insert(ep.obs.end(), o.begin(), o.end());
    const auto a = env.available_actions(st, i);
    for (int v : a) ep.avail.push_back(static_cast<std::uint8_t>(v));
  }
}

Episode empty_episode(const envs::Environment& env, std::uint64_t seed) {
  Episode ep;
  ep.n_agents = env.n_agents();
  ep.obs_dim = env.obs_dim();
  ep.state_dim = env.state_dim();
  ep.n_actions = env.n_actions();
  ep.env_seed = seed;
  return ep;
}

}  // namespace

Episode run_episode(const envs::Environment& env, const AgentNet& net, const ad::ParamSet& params,
                    std::uint64_t env_seed, double epsilon, std::mt19937_64& rng) {
  Episode ep = empty_episode(env, env_seed);
  envs::EnvState st = env.reset(env_seed);
  record_state(env, st, ep);
  const std::size_t n = env.n_agents();
  ad::Tensor hidden(n, net.hidden());
  std::vector<int> prev(n, -1);
  ad::Tensor inputs(n, net.input_dim());
  while (true) {
    const std::size_t t = ep.length();
    for (std::size_t i = 0; i < n; ++i) net.fill_input(ep.observation(t, i), prev[i], i, inputs.row_span(i));
    ad::Tape tape(ad::Tape::Mode::kInference);
    auto [q, h] = net.step(tape, params, tape.constant(inputs), tape.constant(hidden));
    hidden = h.value();
    const auto mask = std::span<const std::uint8_t>(ep.avail).subspan(t * n * ep.n_actions, n * ep.n_actions);
    const std::vector<int> actions = select_actions(q.value(), mask, epsilon, rng);
    const envs::StepOutcome out = env.step(st, actions);
    ep.actions.insert(ep.actions.end(), actions.begin(), actions.end());
    ep.rewards.push_back(out.reward);
    record_state(env, st, ep);
    prev = actions;
    if (out.terminated) {
      ep.terminated = !out.truncated;
      ep.won = out.won;
      break;
    }
  }
  return ep;
}

Episode replay_episode(const envs::Environment& env, std::uint64_t env_seed,
                       std::span<const int> actions) {
  const std::size_t n = env.n_agents();
  if (actions.size() % n != 0) throw Error("replay_episode: action list is not a multiple of n_agents");
  Episode ep = empty_episode(env, env_seed);
  envs::EnvState st = env.reset(env_seed);
  record_state(env, st, ep);
  const std::size_t steps = actions.size() / n;
  for (std::size_t t = 0; t < steps; ++t) {
    const auto a = actions.subspan(t * n, n);
    const envs::StepOutcome out = env.step(st, a);
    ep.actions.insert(ep.actions.end(), a.begin(), a.end());
    ep.rewards.push_back(out.reward);
    record_state(env, st, ep);
    if (out.terminated) {
      if (t + 1 != steps) throw Error("replay_episode: actions continue past the end of the episode");
      ep.terminated = !out.truncated;
      ep.won = out.won;
    } else if (t + 1 == steps) {
      throw Error("replay_episode: actions end before the episode does");
    }
  }
  return ep;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ConfigError("replay: capacity must be >= 1");
}

void ReplayBuffer::push(Episode episode) {
  if (episodes_.size() == capacity_) episodes_.pop_front();
  episodes_.push_back(std::move(episode));
}

std::vector<const Episode*> ReplayBuffer::sample(std::size_t count, std::mt19937_64& rng) const {
  if (count > episodes_.size()) throw Error("replay: sample larger than buffer");
  // Partial Fisher-Yates over indices.
  std::vector<std::size_t> idx(episodes_.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<const Episode*> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
    std::swap(idx[i], idx[pick(rng)]);
    out.push_back(&episodes_[idx[i]]);
  }
  return out;
}

}  // namespace lagma::marl
