#include <doctest.h>

#include <cmath>
#include <functional>
#include <map>
#include <random>

#include "lagma/common/error.hpp"
#include "lagma/envs/corridor.hpp"
#include "lagma/intrinsic/intrinsic.hpp"
#include "support/corridor_oracle.hpp"

using namespace lagma;
using namespace lagma::intrinsic;
using codebook::CodeValueTable;
using codebook::SequenceBuffer;
using lagma::testing::check_unbiased;

namespace {

struct Episode {
  std::vector<std::size_t> codes;
  std::vector<double> returns;
  std::vector<double> max_q;
  double total = 0.0;

  EpisodeCodes view() const { return {codes, returns, max_q, total}; }
};

Episode make_episode(std::vector<std::size_t> codes, double max_q = 0.0) {
  Episode e;
  e.codes = std::move(codes);
  e.returns.assign(e.codes.size(), 0.0);
  e.max_q.assign(e.codes.size(), max_q);
  return e;
}


}  // namespace

TEST_CASE("intrinsic reward arithmetic") {
  SequenceBuffer buffer(4, 2);
  CodeValueTable values(4, 10);
  values.update(2, 5.0);
  buffer.update(100.0, {0, 2, 3});
  Episode e = make_episode({0, 2, 2}, 3.0);
  std::mt19937_64 rng(0);
  const IntrinsicTrace tr = generate_intrinsic(e.view(), buffer, values, {5, 0.99, true, IntrinsicMode::kCqt}, rng);
  CHECK(tr.resampled[0] == 1);
  CHECK(tr.reward[0] == doctest::Approx(1.98));
  CHECK(tr.on_reference[2] == 1);
  CHECK(tr.code_changed[2] == 0);
  CHECK(tr.reward[1] == 0.0);
  CHECK(tr.reward[2] == 0.0);

  Episode low = make_episode({0, 2}, 3.0);
  values.update(2, -3.0);  // mean now 1.0
  auto clamped = generate_intrinsic(low.view(), buffer, values, {5, 0.99, true, IntrinsicMode::kCqt}, rng);
  CHECK(clamped.reward[0] == 0.0);
  auto raw = generate_intrinsic(low.view(), buffer, values, {5, 0.99, false, IntrinsicMode::kCqt}, rng);
  CHECK(raw.reward[0] == doctest::Approx(0.99 * -2.0));
}

TEST_CASE("missing reference or value gives zero reward") {
  SequenceBuffer buffer(4, 2);
  CodeValueTable values(4, 10);
  Episode e = make_episode({1, 2, 3});
  std::mt19937_64 rng(0);
  // The episode itself is stored as the reference; code 2 has no value yet.
  const auto tr = generate_intrinsic(e.view(), buffer, values, {5, 0.9, true, IntrinsicMode::kCqt}, rng);
  CHECK(tr.on_reference[1] == 1);
  CHECK(tr.missing_values == 2);
  for (double r : tr.reward) CHECK(r == 0.0);
}

TEST_CASE("resampling steps emit nothing and refresh on multiples of n_freq") {
  SequenceBuffer buffer(8, 4);
  CodeValueTable values(8, 10);
  for (std::size_t c = 0; c < 8; ++c) values.update(c, 10.0);
  Episode e = make_episode({0, 1, 2, 3, 4, 5, 6, 7});
  std::mt19937_64 rng(1);
  auto tr = generate_intrinsic(e.view(), buffer, values, {3, 0.9, true, IntrinsicMode::kCqt}, rng);
  CHECK(std::vector<std::uint8_t>(tr.resampled) == std::vector<std::uint8_t>{1, 0, 0, 1, 0, 0, 1, 0});
  CHECK(tr.reward == std::vector<double>{9, 9, 0, 9, 9, 0, 9, 0});
  CHECK(buffer.total_entries() == 3);

  SequenceBuffer frozen(8, 4);
  auto once = generate_intrinsic(e.view(), frozen, values, {3, 0.9, true, IntrinsicMode::kCqtNoUpd}, rng);
  CHECK(std::vector<std::uint8_t>(once.resampled) == std::vector<std::uint8_t>{1, 0, 0, 0, 0, 0, 0, 0});
  CHECK(frozen.total_entries() == 1);
  CHECK(once.reward == std::vector<double>{9, 9, 9, 9, 9, 9, 9, 0});
}

TEST_CASE("cq0 keys heaps with the undiscounted episode return") {
  SequenceBuffer buffer(4, 1);
  CodeValueTable values(4, 10);
  Episode e = make_episode({0, 1});
  e.returns = {1.0, 2.0};
  e.total = 220.0;
  std::mt19937_64 rng(2);
  generate_intrinsic(e.view(), buffer, values, {5, 0.9, true, IntrinsicMode::kCq0}, rng);
  CHECK(buffer.heap(0).front().key == 220.0);
  SequenceBuffer disc(4, 1);
  generate_intrinsic(e.view(), disc, values, {5, 0.9, true, IntrinsicMode::kCqt}, rng);
  CHECK(disc.heap(0).front().key == 1.0);
}

TEST_CASE("random batches respect non-negativity, sparsity and determinism") {
  std::mt19937_64 gen(17);
  std::uniform_int_distribution<std::size_t> code(0, 9);
  std::uniform_real_distribution<double> val(-20.0, 40.0);
  std::vector<Episode> eps;
  for (int i = 0; i < 30; ++i) {
    Episode e = make_episode({});
    for (int t = 0; t < 25; ++t) {
      e.codes.push_back(code(gen));
      e.returns.push_back(val(gen));
      e.max_q.push_back(val(gen));
    }
    eps.push_back(e);
  }
  std::vector<EpisodeCodes> views;
  for (const auto& e : eps) views.push_back(e.view());
  auto run = [&](IntrinsicStats* stats) {
    SequenceBuffer buffer(10, 5);
    CodeValueTable values(10, 100);
    for (std::size_t c = 0; c < 10; ++c) values.update(c, val(gen));
    std::mt19937_64 rng(99);
    return generate_intrinsic_batch(views, buffer, values, {5, 0.99, true, IntrinsicMode::kCqt}, rng, stats);
  };
  gen.seed(3);
  IntrinsicStats stats;
  const auto a = run(&stats);
  gen.seed(3);
  const auto b = run(nullptr);
  std::size_t nonzero = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].reward == b[i].reward);
    for (std::size_t t = 0; t < a[i].reward.size(); ++t) {
      CHECK(a[i].reward[t] >= 0.0);
      if (a[i].reward[t] != 0.0) {
        ++nonzero;
        CHECK(a[i].on_reference[t + 1] == 1);
        CHECK(eps[i].codes[t + 1] != eps[i].codes[t]);
      }
    }
  }
  CHECK(nonzero > 0);
  CHECK(stats.nonzero_fraction == doctest::Approx(nonzero / 750.0));
}

TEST_CASE("shape and config errors") {
  SequenceBuffer buffer(4, 1);
  CodeValueTable values(4, 1);
  std::mt19937_64 rng(0);
  Episode e = make_episode({0, 1});
  e.max_q.pop_back();
  CHECK_THROWS_AS(generate_intrinsic(e.view(), buffer, values, {}, rng), ShapeError);
  Episode ok = make_episode({0, 1});
  CHECK_THROWS_AS(generate_intrinsic(ok.view(), buffer, values, {0, 0.9, true, IntrinsicMode::kCqt}, rng), ConfigError);
  CHECK_THROWS_AS(generate_intrinsic(ok.view(), buffer, values, {5, 1.0, true, IntrinsicMode::kCqt}, rng), ConfigError);
  CHECK_THROWS_AS(intrinsic_mode_from_string("cq1"), ConfigError);
}

TEST_CASE("corrected target on a four-state chain equals r + gamma V*") {
  CHECK(proposition1_target(0.0, 10.0, 0.9) == doctest::Approx(9.0));
  envs::EnvSpec spec;
  spec.kind = envs::EnvKind::kCorridor;
  spec.n_agents = 1;
  spec.corridor_length = 4;
  spec.episode_limit = 12;
  spec.target_reward = 0.0;
  spec.win_reward = 1.0;
  const auto report = check_unbiased(spec, 0.9, 1);
  CHECK(report.checked > 20);
  CHECK(report.max_error < 1e-9);
}

TEST_CASE("corrected target on a two-agent corridor equals r + gamma V*") {
  envs::EnvSpec spec;
  spec.kind = envs::EnvKind::kCorridor;
  spec.n_agents = 2;
  spec.corridor_length = 5;
  spec.episode_limit = 10;
  const auto report = check_unbiased(spec, 0.95, 2);
  CHECK(report.checked > 20);
  CHECK(report.max_error < 1e-9);
}
