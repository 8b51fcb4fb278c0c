#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <utility>

#include "lagma/autodiff/layers.hpp"
#include "lagma/autodiff/ops.hpp"

namespace lagma::marl {

struct AgentNetConfig {
  std::size_t obs_dim = 0;
  std::size_t n_actions = 0;
  std::size_t n_agents = 0;
  std::size_t hidden = 64;
};

/// Recurrent Q-network shared by all agents. Input row: observation, one-hot
/// previous action (all zero at t = 0), one-hot agent id.
class AgentNet {
 public:
  static AgentNet create(ad::ParamSet& params, const std::string& prefix, const AgentNetConfig& cfg,
                         std::mt19937_64& rng);

  const AgentNetConfig& config() const { return cfg_; }
  std::size_t input_dim() const { return cfg_.obs_dim + cfg_.n_actions + cfg_.n_agents; }
  std::size_t hidden() const { return cfg_.hidden; }

  /// Writes the input row of `agent` into `out` (size input_dim()).
  void fill_input(std::span<const double> obs, int prev_action, std::size_t agent,
                  std::span<double> out) const;

  /// Unrolls `steps` timesteps of `rows` independent sequences from a zero
  /// hidden state. inputs are time-major [steps * rows, input_dim]; returns
  /// action values [steps * rows, n_actions].
  template <typename Params>
  ad::Var unroll(ad::Tape& tape, Params& params, ad::Var inputs, std::size_t steps,
                 std::size_t rows) const;

  /// One recurrent step: inputs [rows, input_dim], hidden [rows, H] ->
  /// (action values [rows, n_actions], next hidden).
  template <typename Params>
  std::pair<ad::Var, ad::Var> step(ad::Tape& tape, Params& params, ad::Var inputs, ad::Var hidden) const;

 private:
  void check_inputs(const ad::Var& inputs, std::size_t expected_rows) const;

  AgentNetConfig cfg_;
  ad::Linear embed_;
  ad::Linear gru_x_;
  ad::Linear gru_h_;
  ad::Linear head_;
};

template <typename Params>
ad::Var AgentNet::unroll(ad::Tape& tape, Params& params, ad::Var inputs, std::size_t steps,
                         std::size_t rows) const {
  check_inputs(inputs, steps * rows);
  ad::Var e = ad::relu(embed_.forward(tape, params, inputs));
  ad::Var xp = gru_x_.forward(tape, params, e);
  ad::Var h = tape.constant(ad::Tensor(rows, cfg_.hidden));
  std::vector<ad::Var> hs;
  hs.reserve(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    h = ad::gru_cell(ad::slice_rows(xp, t * rows, rows), gru_h_.forward(tape, params, h), h);
    hs.push_back(h);
  }
  return head_.forward(tape, params, ad::concat_rows(hs));
}

template <typename Params>
std::pair<ad::Var, ad::Var> AgentNet::step(ad::Tape& tape, Params& params, ad::Var inputs,
                                           ad::Var hidden) const {
  check_inputs(inputs, hidden.rows());
  ad::Var e = ad::relu(embed_.forward(tape, params, inputs));
  ad::Var h = ad::gru_cell(gru_x_.forward(tape, params, e), gru_h_.forward(tape, params, hidden), hidden);
  return {head_.forward(tape, params, h), h};
}

}  // namespace lagma::marl
