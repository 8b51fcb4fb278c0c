#include <benchmark/benchmark.h>

#include <random>

#include "lagma/common/runtime.hpp"
#include "lagma/envs/env.hpp"
#include "lagma/harness/config.hpp"
#include "lagma/harness/trainer.hpp"
#include "lagma/marl/episode.hpp"
#include "lagma/vq/indexing.hpp"

using namespace lagma;

namespace {

harness::ExperimentConfig default_config() { return harness::parse_config(""); }

}  // namespace

static void BM_CaptureEpisode(benchmark::State& state) {
  harness::Trainer t(default_config());
  std::mt19937_64 rng(1);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    auto ep = marl::run_episode(t.env(), t.learner().agent(), t.learner().params(), seed++, 1.0, rng);
    benchmark::DoNotOptimize(ep.rewards.data());
  }
}
BENCHMARK(BM_CaptureEpisode)->Unit(benchmark::kMillisecond);

static void BM_TrainIteration(benchmark::State& state) {
  harness::ExperimentConfig cfg = default_config();
  harness::Trainer t(cfg);
  std::mt19937_64 rng(2);
  // fill the replay without training
  for (std::uint64_t i = 0; t.replay().size() < cfg.learner.batch_size; ++i) {
    t.add_episode(marl::run_episode(t.env(), t.learner().agent(), t.learner().params(), i, 1.0, rng));
  }
  for (auto _ : state) benchmark::DoNotOptimize(t.train_iteration());
}
BENCHMARK(BM_TrainIteration)->Unit(benchmark::kMillisecond);

static void BM_TargetValues(benchmark::State& state) {
  harness::ExperimentConfig cfg = default_config();
  harness::Trainer t(cfg);
  std::mt19937_64 rng(3);
  std::vector<marl::Episode> eps;
  for (std::uint64_t i = 0; i < cfg.learner.batch_size; ++i) {
    eps.push_back(marl::run_episode(t.env(), t.learner().agent(), t.learner().params(), i, 1.0, rng));
  }
  std::vector<const marl::Episode*> batch;
  for (const auto& e : eps) batch.push_back(&e);
  for (auto _ : state) benchmark::DoNotOptimize(t.learner().target_values(batch));
}
BENCHMARK(BM_TargetValues)->Unit(benchmark::kMillisecond);

static void BM_QuantizeEpisode(benchmark::State& state) {
  harness::ExperimentConfig cfg = default_config();
  harness::Trainer t(cfg);
  std::mt19937_64 rng(4);
  const auto ep = marl::run_episode(t.env(), t.learner().agent(), t.learner().params(), 0, 1.0, rng);
  for (auto _ : state) benchmark::DoNotOptimize(t.vq_model().quantize_states(ep.states));
}
BENCHMARK(BM_QuantizeEpisode)->Unit(benchmark::kMicrosecond);

static void BM_TimestepIndices(benchmark::State& state) {
  const auto n_c = static_cast<std::size_t>(state.range(0));
  std::size_t t = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(vq::timestep_indices(t % 50, 50, n_c));
    ++t;
  }
}
BENCHMARK(BM_TimestepIndices)->Arg(64)->Arg(512);

int main(int argc, char** argv) {
  lagma::configure_allocator();
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
