#include "lagma/marl/agent_net.hpp"

#include <algorithm>

#include "lagma/common/error.hpp"

namespace lagma::marl {

AgentNet AgentNet::create(ad::ParamSet& params, const std::string& prefix, const AgentNetConfig& cfg,
                          std::mt19937_64& rng) {
  if (cfg.obs_dim == 0 || cfg.n_actions == 0 || cfg.n_agents == 0 || cfg.hidden == 0) {
    throw ConfigError("agent net: all dimensions must be >= 1");
  }
  AgentNet net;
  net.cfg_ = cfg;
  net.embed_ = ad::Linear::create(params, prefix + ".embed", net.input_dim(), cfg.hidden, rng);
  net.gru_x_ = ad::Linear::create(params, prefix + ".gru_x", cfg.hidden, 3 * cfg.hidden, rng);
  net.gru_h_ = ad::Linear::create(params, prefix + ".gru_h", cfg.hidden, 3 * cfg.hidden, rng);
  net.head_ = ad::Linear::create(params, prefix + ".head", cfg.hidden, cfg.n_actions, rng);
  return net;
}

void AgentNet::fill_input(std::span<const double> obs, int prev_action, std::size_t agent,
                          std::span<double> out) const {
  if (obs.size() != cfg_.obs_dim || out.size() != input_dim() || agent >= cfg_.n_agents ||
      prev_action >= static_cast<int>(cfg_.n_actions)) {
    throw ShapeError("agent net: bad input (obs " + std::to_string(obs.size()) + ", expected " +
                     std::to_string(cfg_.obs_dim) + ")");
  }
  std::fill(out.begin(), out.end(), 0.0);
  std::copy(obs.begin(), obs.end(), out.begin());
  if (prev_action >= 0) out[cfg_.obs_dim + static_cast<std::size_t>(prev_action)] = 1.0;
  out[cfg_.obs_dim + cfg_.n_actions + agent] = 1.0;
}

void AgentNet::check_inputs(const ad::Var& inputs, std::size_t expected_rows) const {
  if (inputs.cols() != input_dim() || inputs.rows() != expected_rows) {
    throw ShapeError("agent net: inputs " + inputs.value().shape_string() + ", expected [" +
                     std::to_string(expected_rows) + "," + std::to_string(input_dim()) + "]");
  }
}

}  // namespace lagma::marl
