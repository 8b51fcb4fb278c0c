#include "lagma/marl/mixer.hpp"

#include "lagma/common/error.hpp"

namespace lagma::marl {

std::string to_string(MixerKind kind) { return kind == MixerKind::kQmix ? "qmix" : "sum"; }

MixerKind mixer_kind_from_string(const std::string& name) {
  if (name == "qmix") return MixerKind::kQmix;
  if (name == "sum") return MixerKind::kSum;
  throw ConfigError("mixer: unknown kind '" + name + "' (expected qmix or sum)");
}

Mixer Mixer::create(ad::ParamSet& params, const std::string& prefix, const MixerConfig& cfg,
                    std::mt19937_64& rng) {
  if (cfg.n_agents == 0 || cfg.state_dim == 0) throw ConfigError("mixer: dimensions must be >= 1");
  Mixer m;
  m.cfg_ = cfg;
  if (cfg.kind == MixerKind::kSum) return m;
  const std::vector<std::size_t> hyper = {cfg.hypernet_hidden};
  m.hyper_w1_ = ad::Mlp::create(params, prefix + ".hyper_w1", cfg.state_dim, hyper,
                                cfg.n_agents * cfg.embed, ad::Activation::kRelu, rng);
  m.hyper_b1_ = ad::Linear::create(params, prefix + ".hyper_b1", cfg.state_dim, cfg.embed, rng);
  m.hyper_w2_ = ad::Mlp::create(params, prefix + ".hyper_w2", cfg.state_dim, hyper, cfg.embed,
                                ad::Activation::kRelu, rng);
  m.hyper_v_ = ad::Mlp::create(params, prefix + ".hyper_v", cfg.state_dim, {cfg.embed}, 1,
                               ad::Activation::kRelu, rng);
  return m;
}

void Mixer::check(const ad::Var& q, const ad::Var& states) const {
  if (q.cols() != cfg_.n_agents || states.cols() != cfg_.state_dim || q.rows() != states.rows()) {
    throw ShapeError("mixer: q " + q.value().shape_string() + " and states " +
                     states.value().shape_string() + " do not match " +
                     std::to_string(cfg_.n_agents) + " agents, state dimension " +
                     std::to_string(cfg_.state_dim));
  }
}

}  // namespace lagma::marl
