#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "lagma/envs/env.hpp"
#include "lagma/intrinsic/intrinsic.hpp"
#include "lagma/marl/learner.hpp"
#include "lagma/vq/vq_model.hpp"

namespace lagma::harness {

enum class Variant { kLagma, kQmixBaseline, kNoCl, kClAll, kCq0, kCqtNoUpd };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& name);
const std::vector<Variant>& all_variants();

struct RunConfig {
  std::uint64_t total_env_steps = 200000;
  std::uint64_t eval_interval = 10000;
  std::size_t eval_episodes = 32;
  std::uint64_t seed = 1;
  Variant variant = Variant::kLagma;
};

/// Experiment-level defaults that differ from the component defaults.
vq::VqConfig default_vq_config();
marl::LearnerConfig default_learner_config();

struct ExperimentConfig {
  envs::EnvSpec env;
  vq::VqConfig vq = default_vq_config();
  vq::VqCadence cadence;
  intrinsic::IntrinsicConfig intrinsic;
  marl::LearnerConfig learner = default_learner_config();
  /// Top-k trajectories kept per code.
  std::size_t seq_k = 10;
  /// Returns averaged per code.
  std::size_t code_buffer = 100;
  RunConfig run;

  /// Rejects out-of-range values; recommended ranges are quoted in messages.
  void validate() const;
  /// Settings implied by the variant tag (coverage mode, intrinsic mode).
  ExperimentConfig with_variant_applied() const;
  bool intrinsic_enabled() const { return run.variant != Variant::kQmixBaseline; }
};

/// Parses `key = value` lines grouped under [env], [vq], [intrinsic],
/// [learner] and [run] headers. Keys may also appear before any header.
/// Unknown keys and malformed values are rejected.
ExperimentConfig parse_config(const std::string& text, const std::string& origin = "<string>");
ExperimentConfig load_config(const std::string& path);
/// Every key with its current value, readable by parse_config.
std::string format_config(const ExperimentConfig& config);
/// Every accepted key as "section.key".
std::vector<std::string> config_key_names();

}  // namespace lagma::harness
