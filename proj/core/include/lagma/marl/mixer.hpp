#pragma once

#include <cstddef>
#include <random>
#include <string>

#include "lagma/autodiff/layers.hpp"
#include "lagma/autodiff/ops.hpp"

namespace lagma::marl {

enum class MixerKind { kQmix, kSum };

std::string to_string(MixerKind kind);
MixerKind mixer_kind_from_string(const std::string& name);

struct MixerConfig {
  MixerKind kind = MixerKind::kQmix;
  std::size_t n_agents = 0;
  std::size_t state_dim = 0;
  std::size_t embed = 32;
  std::size_t hypernet_hidden = 64;
};

/// Monotonic mixing network: hypernetworks turn the global state into
/// non-negative mixing weights for the per-agent chosen-action values.
/// The sum kind adds the agent values with no parameters.
class Mixer {
 public:
  static Mixer create(ad::ParamSet& params, const std::string& prefix, const MixerConfig& cfg,
                      std::mt19937_64& rng);

  const MixerConfig& config() const { return cfg_; }

  /// q [m, n_agents], states [m, state_dim] -> Q_tot [m, 1].
  template <typename Params>
  ad::Var forward(ad::Tape& tape, Params& params, ad::Var q, ad::Var states) const;

 private:
  void check(const ad::Var& q, const ad::Var& states) const;

  MixerConfig cfg_;
  ad::Mlp hyper_w1_;
  ad::Linear hyper_b1_;
  ad::Mlp hyper_w2_;
  ad::Mlp hyper_v_;
};

template <typename Params>
ad::Var Mixer::forward(ad::Tape& tape, Params& params, ad::Var q, ad::Var states) const {
  check(q, states);
  if (cfg_.kind == MixerKind::kSum) {
    return ad::matmul(q, tape.constant(ad::Tensor(cfg_.n_agents, 1, 1.0)));
  }
  ad::Var w1 = ad::abs(hyper_w1_.forward(tape, params, states));
  ad::Var hidden =
      ad::elu(ad::rowwise_matvec(q, w1, cfg_.embed) + hyper_b1_.forward(tape, params, states));
  ad::Var w2 = ad::abs(hyper_w2_.forward(tape, params, states));
  return ad::rowwise_matvec(hidden, w2, 1) + hyper_v_.forward(tape, params, states);
}

}  // namespace lagma::marl
