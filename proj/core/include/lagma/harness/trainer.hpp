#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "lagma/codebook/code_value_table.hpp"
#include "lagma/codebook/sequence_buffer.hpp"
#include "lagma/envs/env.hpp"
#include "lagma/harness/config.hpp"
#include "lagma/marl/episode.hpp"
#include "lagma/marl/learner.hpp"
#include "lagma/vq/vq_model.hpp"

namespace lagma::harness {

/// One line of the metrics stream, written at every evaluation point.
struct MetricsRecord {
  std::uint64_t step = 0;
  std::uint64_t episodes = 0;
  std::uint64_t train_steps = 0;
  double win_rate = 0.0;
  double test_return = 0.0;
  double loss = 0.0;
  double vq_loss = 0.0;
  double mean_intrinsic = 0.0;
  double intrinsic_nonzero = 0.0;
  /// Fraction of codes assigned to any state of a training batch since the last record.
  double code_usage = 0.0;
  double epsilon = 0.0;

  std::string to_json() const;
};

struct EvalResult {
  std::size_t episodes = 0;
  std::size_t wins = 0;
  double win_rate = 0.0;
  double mean_return = 0.0;
};

/// Sums over the training iterations since the last metrics record.
struct MetricsWindow {
  double loss_sum = 0.0;
  double vq_loss_sum = 0.0;
  double intrinsic_sum = 0.0;
  double nonzero_sum = 0.0;
  std::uint64_t train_count = 0;
  std::uint64_t vq_count = 0;
  std::set<std::size_t> codes;
};

/// Training seeds lie below 2^52 and evaluation seeds at or above it.
std::uint64_t train_env_seed(std::uint64_t run_seed, std::uint64_t episode);
std::uint64_t eval_env_seed(std::uint64_t run_seed, std::uint64_t round, std::uint64_t episode);

/// Owns every piece of state of one training run.
class Trainer {
 public:
  explicit Trainer(ExperimentConfig config);

  /// Trains until the next evaluation point (the first call evaluates the
  /// untrained policy) and returns that point's record.
  MetricsRecord advance();
  bool finished() const { return finished_; }

  /// Greedy rollouts on evaluation seeds of `round`, run on `threads`
  /// workers; results do not depend on the thread count.
  EvalResult evaluate(std::size_t episodes, std::uint64_t round, std::size_t threads = 1) const;

  /// One learner + VQ update on a replay sample (no-op while the replay holds
  /// fewer than batch_size episodes). Returns whether an update happened.
  bool train_iteration();
  /// Appends an episode to the replay buffer without counting its steps.
  void add_episode(marl::Episode episode) { replay_.push(std::move(episode)); }

  const ExperimentConfig& config() const { return config_; }
  const ExperimentConfig& effective_config() const { return effective_; }
  const envs::Environment& env() const { return *env_; }
  marl::Learner& learner() { return learner_; }
  const marl::Learner& learner() const { return learner_; }
  vq::VqModel& vq_model() { return vq_; }
  const vq::VqModel& vq_model() const { return vq_; }
  const codebook::CodeValueTable& code_values() const { return values_; }
  const codebook::SequenceBuffer& sequences() const { return sequences_; }
  const marl::ReplayBuffer& replay() const { return replay_; }
  std::uint64_t env_steps() const { return env_steps_; }
  std::uint64_t episodes() const { return episodes_; }
  std::uint64_t records() const { return records_; }
  /// Worker threads used by the evaluation inside advance().
  void set_eval_threads(std::size_t n) { eval_threads_ = n == 0 ? 1 : n; }
  double epsilon() const;

  /// When set, intrinsic rewards are computed but replaced by zeros before
  /// the TD update, whatever the variant.
  void force_zero_intrinsic(bool on) { force_zero_intrinsic_ = on; }

  void save_checkpoint(const std::string& path) const;
  static Trainer load_checkpoint(const std::string& path);

 private:
  void run_training_episode();

  ExperimentConfig config_;
  ExperimentConfig effective_;
  std::unique_ptr<envs::Environment> env_;
  marl::Learner learner_;
  vq::VqModel vq_;
  codebook::CodeValueTable values_;
  codebook::SequenceBuffer sequences_;
  marl::ReplayBuffer replay_;

  std::mt19937_64 act_rng_;
  std::mt19937_64 sample_rng_;
  std::mt19937_64 intrinsic_rng_;

  std::uint64_t env_steps_ = 0;
  std::uint64_t episodes_ = 0;
  std::uint64_t records_ = 0;
  std::uint64_t next_eval_ = 0;
  bool finished_ = false;
  bool force_zero_intrinsic_ = false;
  std::size_t eval_threads_ = 1;
  MetricsWindow window_;
};

}  // namespace lagma::harness
