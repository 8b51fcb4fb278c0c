#include "lagma/marl/learner.hpp"

#include <algorithm>
#include <limits>

#include "lagma/common/error.hpp"
#include "lagma/marl/policy.hpp"

namespace lagma::marl {

void LearnerConfig::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("learner: gamma must be in [0, 1)");
  if (!(reward_scale > 0.0)) throw ConfigError("learner: reward_scale must be positive");
  if (batch_size == 0) throw ConfigError("learner: batch_size must be >= 1");
  if (target_update_interval == 0) throw ConfigError("learner: target_update_interval must be >= 1");
  if (replay_capacity < batch_size) throw ConfigError("learner: replay_capacity must be >= batch_size");
  if (agent_hidden == 0 || mixer_embed == 0 || hypernet_hidden == 0) {
    throw ConfigError("learner: layer widths must be >= 1");
  }
}

/// Time-major padded view of a batch: row (t * B + b) * n + i.
struct Learner::Packed {
  std::size_t batch = 0;
  std::size_t steps = 0;  // number of state slots packed
  ad::Tensor inputs;      // [steps * B * n, input_dim]
  ad::Tensor states;      // [steps * B, state_dim]
};

Learner::Learner(const EnvDims& dims, LearnerConfig config, std::uint64_t seed)
    : dims_(dims), config_(std::move(config)) {
  config_.validate();
  std::mt19937_64 rng(seed);
  agent_ = AgentNet::create(params_, "agent", {dims.obs_dim, dims.n_actions, dims.n_agents, config_.agent_hidden},
                            rng);
  mixer_ = Mixer::create(params_, "mixer",
                         {config_.mixer, dims.n_agents, dims.state_dim, config_.mixer_embed,
                          config_.hypernet_hidden},
                         rng);
  target_ = params_;
  optim_ = ad::AdamState(params_, config_.optimizer);
}

Learner::Packed Learner::pack(std::span<const Episode* const> batch, std::size_t steps) const {
  const std::size_t B = batch.size();
  const std::size_t n = dims_.n_agents;
  Packed p;
  p.batch = B;
  p.steps = steps;
  p.inputs = ad::Tensor(steps * B * n, agent_.input_dim());
  p.states = ad::Tensor(steps * B, dims_.state_dim);
  for (std::size_t b = 0; b < B; ++b) {
    const Episode& ep = *batch[b];
    if (ep.n_agents != n || ep.obs_dim != dims_.obs_dim || ep.state_dim != dims_.state_dim ||
        ep.n_actions != dims_.n_actions) {
      throw ShapeError("learner: episode dimensions do not match the networks");
    }
    const std::size_t last = std::min(steps, ep.length() + 1);
    for (std::size_t t = 0; t < last; ++t) {
      for (std::size_t i = 0; i < n; ++i) {
        const int prev = t == 0 ? -1 : ep.actions[(t - 1) * n + i];
        agent_.fill_input(ep.observation(t, i), prev, i, p.inputs.row_span((t * B + b) * n + i));
      }
      const auto s = ep.state(t);
      std::copy(s.begin(), s.end(), p.states.row_span(t * B + b).begin());
    }
  }
  return p;
}

namespace {

std::size_t max_length(std::span<const Episode* const> batch) {
  std::size_t T = 0;
  for (const Episode* ep : batch) T = std::max(T, ep->length());
  return T;
}

/// Per-agent best available value from [rows * n, A] action values. `choose`
/// (optional) supplies the action values used to pick the argmax.
ad::Tensor best_agent_values(const ad::Tensor& q, const ad::Tensor* choose,
                             std::span<const Episode* const> batch, std::size_t steps, std::size_t n,
                             std::size_t A) {
  const std::size_t B = batch.size();
  ad::Tensor out(steps * B, n);
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t b = 0; b < B; ++b) {
      const Episode& ep = *batch[b];
      if (t > ep.length()) continue;
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t row = (t * B + b) * n + i;
        const auto mask = ep.available(t, i);
        const auto pick_from = choose != nullptr ? choose->row_span(row) : q.row_span(row);
        const int a = greedy_action(pick_from, mask);
        out(t * B + b, i) = q(row, static_cast<std::size_t>(a));
      }
    }
  }
  return out;
}

}  // namespace

StateValues Learner::target_values(std::span<const Episode* const> batch) const {
  const std::size_t B = batch.size();
  const std::size_t steps = max_length(batch) + 1;
  const std::size_t n = dims_.n_agents;
  const Packed p = pack(batch, steps);
  ad::Tape tape(ad::Tape::Mode::kInference);
  ad::Var inputs = tape.constant_ref(p.inputs);
  const ad::Tensor q = agent_.unroll(tape, target_, inputs, steps, B * n).value();
  ad::Tensor online;
  if (config_.double_q) {
    ad::Tape online_tape(ad::Tape::Mode::kInference);
    const ad::Var in2 = online_tape.constant_ref(p.inputs);
    online = agent_.unroll(online_tape, std::as_const(params_), in2, steps, B * n).value();
  }
  const ad::Tensor best =
      best_agent_values(q, config_.double_q ? &online : nullptr, batch, steps, n, dims_.n_actions);
  const ad::Tensor v =
      mixer_.forward(tape, target_, tape.constant(best), tape.constant_ref(p.states)).value();
  StateValues out(B);
  for (std::size_t b = 0; b < B; ++b) {
    out[b].resize(batch[b]->length() + 1);
    for (std::size_t t = 0; t <= batch[b]->length(); ++t) out[b][t] = v(t * B + b, 0);
  }
  return out;
}

ad::Var Learner::build_td_loss(ad::Tape& tape, std::span<const Episode* const> batch,
                               const StateValues& targets,
                               std::span<const std::vector<double>> intrinsic, TdStats* stats) {
  const std::size_t B = batch.size();
  if (B == 0) throw Error("td loss: empty batch");
  if (targets.size() != B || (!intrinsic.empty() && intrinsic.size() != B)) {
    throw ShapeError("td loss: targets or intrinsic rewards do not match the batch");
  }
  const std::size_t n = dims_.n_agents;
  const std::size_t T = max_length(batch);
  if (T == 0) throw Error("td loss: batch has no transitions");
  Packed p = pack(batch, T);

  std::vector<std::size_t> chosen(T * B * n, 0);
  ad::Tensor y(T * B, 1);
  ad::Tensor w(T * B, 1);
  std::size_t valid = 0;
  double target_sum = 0.0;
  for (std::size_t b = 0; b < B; ++b) {
    const Episode& ep = *batch[b];
    const std::size_t L = ep.length();
    if (targets[b].size() != L + 1 || (!intrinsic.empty() && intrinsic[b].size() != L)) {
      throw ShapeError("td loss: per-episode target or intrinsic length mismatch");
    }
    for (std::size_t t = 0; t < L; ++t) {
      for (std::size_t i = 0; i < n; ++i) {
        chosen[(t * B + b) * n + i] = static_cast<std::size_t>(ep.actions[t * n + i]);
      }
      const bool cut = ep.terminated && t + 1 == L;
      double target = config_.reward_scale * ep.rewards[t] + (intrinsic.empty() ? 0.0 : intrinsic[b][t]);
      if (!cut) target += config_.gamma * targets[b][t + 1];
      y(t * B + b, 0) = target;
      w(t * B + b, 0) = 1.0;
      target_sum += target;
      ++valid;
    }
  }
  for (std::size_t i = 0; i < w.size(); ++i) w[i] /= static_cast<double>(valid);

  // The tape outlives this call, so inputs are moved onto it rather than referenced.
  ad::Var q = agent_.unroll(tape, params_, tape.constant(std::move(p.inputs)), T, B * n);
  ad::Var q_taken = ad::reshape(ad::gather_cols(q, chosen), T * B, n);
  ad::Var q_tot = mixer_.forward(tape, params_, q_taken, tape.constant(std::move(p.states)));
  ad::Var err = q_tot - tape.constant(std::move(y));
  ad::Var loss = ad::weighted_sum(err * err, w);

  if (stats != nullptr) {
    stats->loss = loss.value().item();
    double qs = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (w[i] > 0.0) qs += q_tot.value()[i];
    }
    stats->mean_q = qs / static_cast<double>(valid);
    stats->mean_target = target_sum / static_cast<double>(valid);
    stats->valid_steps = valid;
  }
  return loss;
}

TrainReport Learner::train(std::span<const Episode* const> batch, const StateValues& targets,
                           std::span<const std::vector<double>> intrinsic) {
  TrainReport report;
  params_.zero_grad();
  ad::Tape tape;
  ad::Var loss = build_td_loss(tape, batch, targets, intrinsic, &report.td);
  tape.backward(loss);
  const ad::AdamStepResult step = ad::adam_step(params_, optim_);
  report.applied = step.applied;
  report.grad_norm = step.grad_norm;
  ++train_steps_;
  if (train_steps_ % config_.target_update_interval == 0) {
    sync_target();
    report.synced = true;
  }
  return report;
}

void Learner::sync_target() { target_.copy_values_from(params_); }

}  // namespace lagma::marl
