#include "lagma/harness/trainer.hpp"

#include "json.hpp"
#include <spdlog/spdlog.h>

#include <algorithm>
#include <thread>

#include "lagma/common/error.hpp"
#include "lagma/intrinsic/intrinsic.hpp"
#include "lagma/marl/policy.hpp"

namespace lagma::harness {

namespace {

constexpr std::uint64_t kSeedMask = (std::uint64_t{1} << 52) - 1;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t salt) {
  return std::mt19937_64(splitmix64(seed ^ splitmix64(salt)));
}

}  // namespace

std::uint64_t train_env_seed(std::uint64_t run_seed, std::uint64_t episode) {
  return splitmix64(splitmix64(run_seed) + episode) & kSeedMask;
}

std::uint64_t eval_env_seed(std::uint64_t run_seed, std::uint64_t round, std::uint64_t episode) {
  return (kSeedMask + 1) + (splitmix64(splitmix64(run_seed ^ 0xe7a1ULL) + (round << 20) + episode) & kSeedMask);
}

std::string MetricsRecord::to_json() const {
  nlohmann::ordered_json j;
  j["step"] = step;
  j["episodes"] = episodes;
  j["train_steps"] = train_steps;
  j["win_rate"] = win_rate;
  j["test_return"] = test_return;
  j["loss"] = loss;
  j["vq_loss"] = vq_loss;
  j["mean_intrinsic"] = mean_intrinsic;
  j["intrinsic_nonzero"] = intrinsic_nonzero;
  j["code_usage"] = code_usage;
  j["epsilon"] = epsilon;
  return j.dump();
}

Trainer::Trainer(ExperimentConfig config)
    : config_(std::move(config)),
      effective_(config_.with_variant_applied()),
      env_(envs::make_environment(effective_.env)),
      learner_({env_->n_agents(), env_->obs_dim(), env_->state_dim(), env_->n_actions()},
               effective_.learner, splitmix64(config_.run.seed ^ 0x1ULL)),
      vq_(env_->state_dim(), effective_.vq, splitmix64(config_.run.seed ^ 0x2ULL)),
      values_(effective_.vq.n_codes, effective_.code_buffer),
      sequences_(effective_.vq.n_codes, effective_.seq_k),
      replay_(effective_.learner.replay_capacity),
      act_rng_(stream(config_.run.seed, 11)),
      sample_rng_(stream(config_.run.seed, 12)),
      intrinsic_rng_(stream(config_.run.seed, 13)) {
  effective_.validate();
}

double Trainer::epsilon() const {
  const auto& l = effective_.learner;
  return marl::epsilon_at(env_steps_, l.epsilon_anneal_steps, l.epsilon_start, l.epsilon_end);
}

void Trainer::run_training_episode() {
  marl::Episode ep = marl::run_episode(*env_, learner_.agent(), learner_.params(),
                                       train_env_seed(config_.run.seed, episodes_), epsilon(), act_rng_);
  env_steps_ += ep.length();
  ++episodes_;
  replay_.push(std::move(ep));
  train_iteration();
}

bool Trainer::train_iteration() {
  const std::size_t B = effective_.learner.batch_size;
  if (replay_.size() < B) return false;
  const std::vector<const marl::Episode*> batch = replay_.sample(B, sample_rng_);
  const marl::StateValues targets = learner_.target_values(batch);
  const double gamma = effective_.learner.gamma;
  const double scale = effective_.learner.reward_scale;

  std::vector<std::vector<std::size_t>> codes(B);
  std::vector<std::vector<double>> returns(B);
  std::vector<intrinsic::EpisodeCodes> views(B);
  for (std::size_t b = 0; b < B; ++b) {
    const marl::Episode& ep = *batch[b];
    codes[b] = vq_.quantize_states(ep.states);
    window_.codes.insert(codes[b].begin(), codes[b].end());
    codes[b].resize(ep.length());
    returns[b] = ep.discounted_returns(gamma);
    for (double& r : returns[b]) r *= scale;
    views[b] = {codes[b], returns[b], std::span<const double>(targets[b]).first(ep.length()),
                scale * ep.total_reward()};
  }
  intrinsic::IntrinsicStats ri_stats;
  auto traces = intrinsic::generate_intrinsic_batch(views, sequences_, values_, effective_.intrinsic,
                                                    intrinsic_rng_, &ri_stats);
  std::vector<std::vector<double>> bonus(B);
  const bool use = effective_.intrinsic_enabled() && !force_zero_intrinsic_;
  for (std::size_t b = 0; b < B; ++b) {
    bonus[b] = std::move(traces[b].reward);
    if (!use) std::fill(bonus[b].begin(), bonus[b].end(), 0.0);
  }
  const marl::TrainReport report = learner_.train(batch, targets, bonus);

  std::vector<vq::StateSequence> seqs(B);
  for (std::size_t b = 0; b < B; ++b) seqs[b] = {batch[b]->states, returns[b]};
  const vq::VqStepReport vq_report = vq::train_vqvae_step(vq_, seqs, episodes_, effective_.cadence, values_);

  window_.loss_sum += report.td.loss;
  if (use) {
    window_.intrinsic_sum += ri_stats.mean;
    window_.nonzero_sum += ri_stats.nonzero_fraction;
  }
  ++window_.train_count;
  if (vq_report.model_updated) {
    window_.vq_loss_sum += vq_report.loss;
    ++window_.vq_count;
  }
  return true;
}

EvalResult Trainer::evaluate(std::size_t episodes, std::uint64_t round, std::size_t threads) const {
  if (episodes == 0) throw Error("evaluate: episode count must be >= 1");
  std::vector<double> returns(episodes, 0.0);
  std::vector<std::uint8_t> won(episodes, 0);
  auto work = [&](std::size_t worker, std::size_t stride) {
    for (std::size_t i = worker; i < episodes; i += stride) {
      const std::uint64_t seed = eval_env_seed(config_.run.seed, round, i);
      std::mt19937_64 rng(seed);
      const marl::Episode ep = marl::run_episode(*env_, learner_.agent(), learner_.params(), seed, 0.0, rng);
      returns[i] = ep.total_reward();
      won[i] = ep.won ? 1 : 0;
    }
  };
  threads = std::max<std::size_t>(1, std::min(threads, episodes));
  if (threads == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w) pool.emplace_back(work, w, threads);
    for (auto& t : pool) t.join();
  }
  EvalResult r;
  r.episodes = episodes;
  for (std::size_t i = 0; i < episodes; ++i) {
    r.wins += won[i];
    r.mean_return += returns[i];
  }
  r.win_rate = static_cast<double>(r.wins) / static_cast<double>(episodes);
  r.mean_return /= static_cast<double>(episodes);
  return r;
}

MetricsRecord Trainer::advance() {
  if (finished_) throw Error("trainer: run already finished");
  const std::uint64_t total = effective_.run.total_env_steps;
  if (records_ > 0) {
    while (env_steps_ < next_eval_ && env_steps_ < total) run_training_episode();
  }
  const EvalResult eval = evaluate(effective_.run.eval_episodes, records_, eval_threads_);
  MetricsRecord rec;
  rec.step = env_steps_;
  rec.episodes = episodes_;
  rec.train_steps = learner_.train_steps();
  rec.win_rate = eval.win_rate;
  rec.test_return = eval.mean_return;
  const double n = static_cast<double>(std::max<std::uint64_t>(1, window_.train_count));
  rec.loss = window_.loss_sum / n;
  rec.mean_intrinsic = window_.intrinsic_sum / n;
  rec.intrinsic_nonzero = window_.nonzero_sum / n;
  rec.vq_loss = window_.vq_loss_sum / static_cast<double>(std::max<std::uint64_t>(1, window_.vq_count));
  rec.code_usage = static_cast<double>(window_.codes.size()) / static_cast<double>(effective_.vq.n_codes);
  rec.epsilon = epsilon();
  window_ = MetricsWindow{};
  ++records_;
  const std::uint64_t interval = effective_.run.eval_interval;
  next_eval_ = (env_steps_ / interval + 1) * interval;
  finished_ = env_steps_ >= total;
  spdlog::info("step {} episodes {} win {:.3f} return {:.1f} loss {:.4f} r_i {:.4f} codes {:.3f}", rec.step,
               rec.episodes, rec.win_rate, rec.test_return, rec.loss, rec.mean_intrinsic, rec.code_usage);
  return rec;
}

}  // namespace lagma::harness
