#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <set>

#include "lagma/autodiff/tape.hpp"
#include "lagma/codebook/code_value_table.hpp"
#include "lagma/common/error.hpp"
#include "lagma/vq/indexing.hpp"
#include "lagma/vq/pca.hpp"
#include "lagma/vq/vq_model.hpp"

using namespace lagma;
using namespace lagma::vq;

namespace {

/// One code, scalar state and latent, identity encoder/decoder, code at 0.
VqModel scalar_model(CoverageMode mode) {
  VqConfig cfg;
  cfg.n_codes = 1;
  cfg.latent_dim = 1;
  cfg.encoder_hidden = {};
  cfg.decoder_hidden = {};
  cfg.coverage = mode;
  VqModel m(1, cfg, 0);
  m.params().value("encoder.0.w")(0, 0) = 1.0;
  m.params().value("encoder.0.b")(0, 0) = 0.0;
  m.params().value("decoder.0.w")(0, 0) = 1.0;
  m.params().value("decoder.0.b")(0, 0) = 0.0;
  m.params().value("codebook")(0, 0) = 0.0;
  return m;
}

}  // namespace

TEST_CASE("timestep indices partition the codebook when n_codes >= T") {
  for (std::size_t T : {1u, 3u, 7u, 20u, 64u}) {
    for (std::size_t n : {64u, 65u, 100u, 512u}) {
      if (n < T) continue;
      std::vector<int> seen(n, 0);
      for (std::size_t t = 0; t < T; ++t) {
        const IndexSet s = timestep_indices(t, T, n);
        REQUIRE(std::is_sorted(s.begin(), s.end()));
        const std::size_t d = n / T;
        REQUIRE(s.size() == d + (t < n % T ? 1 : 0));
        for (std::size_t j : s) ++seen[j];
      }
      for (int c : seen) REQUIRE(c == 1);
    }
  }
}

TEST_CASE("timestep indices worked examples") {
  CHECK(timestep_indices(0, 3, 8) == IndexSet{0, 1, 6});
  CHECK(timestep_indices(1, 3, 8) == IndexSet{2, 3, 7});
  CHECK(timestep_indices(2, 3, 8) == IndexSet{4, 5});
  CHECK(timestep_indices(5, 10, 4) == IndexSet{2});
  CHECK(timestep_indices(9, 10, 4) == IndexSet{3});
  CHECK_THROWS_AS(timestep_indices(3, 3, 8), Error);
}

TEST_CASE("nearest code breaks ties toward the lowest index") {
  VqConfig cfg;
  cfg.n_codes = 3;
  cfg.latent_dim = 2;
  VqModel m(2, cfg, 1);
  ad::Tensor& e = m.params().value("codebook");
  e = ad::Tensor(3, 2, std::vector<double>{1, 0, -1, 0, 0, 5});
  const std::vector<double> mid = {0.0, 0.0};
  CHECK(m.nearest_code(mid) == 0);
  const std::vector<double> left = {-0.7, 0.1};
  const Quantized q = m.quantize(left);
  CHECK(q.index == 1);
  CHECK(q.code == std::vector<double>{-1, 0});
  CHECK_THROWS_AS(m.nearest_code(std::vector<double>{1.0}), ShapeError);
}

TEST_CASE("hand-computed losses and gradients of a scalar model") {
  VqModel m = scalar_model(CoverageMode::kCvr);
  const std::vector<double> s = {2.0};
  const VqLosses l = m.losses(s, 0, 1, CoverageMode::kCvr);
  CHECK(l.reconstruction == doctest::Approx(4.0));
  CHECK(l.vq == doctest::Approx(4.0));
  CHECK(l.commitment == doctest::Approx(4.0));
  CHECK(l.vq_total == doctest::Approx(10.0));
  CHECK(l.coverage == doctest::Approx(4.0));
  CHECK(l.total == doctest::Approx(12.0));

  const StateSequence seq{s, {}};
  ad::Tape tape;
  VqLosses terms;
  ad::Var loss = m.build_loss(tape, std::span<const StateSequence>(&seq, 1), CoverageMode::kCvr, &terms);
  CHECK(loss.value().item() == doctest::Approx(12.0));
  m.params().zero_grad();
  tape.backward(loss);
  // Reconstruction reaches the encoder only through the straight-through path.
  CHECK(m.params().grad("codebook")(0, 0) == doctest::Approx(-6.0));
  CHECK(m.params().grad("encoder.0.w")(0, 0) == doctest::Approx(-4.0));
  CHECK(m.params().grad("encoder.0.b")(0, 0) == doctest::Approx(-2.0));
  CHECK(m.params().grad("decoder.0.w")(0, 0) == doctest::Approx(0.0));
  CHECK(m.params().grad("decoder.0.b")(0, 0) == doctest::Approx(-4.0));
}

TEST_CASE("coverage term never reaches the encoder") {
  VqConfig cfg;
  cfg.n_codes = 16;
  cfg.latent_dim = 3;
  cfg.encoder_hidden = {8};
  cfg.decoder_hidden = {8};
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  std::vector<double> states(10 * 4);
  for (auto& v : states) v = g(rng);
  const StateSequence seq{states, {}};
  const std::span<const StateSequence> batch(&seq, 1);

  auto grads = [&](CoverageMode mode) {
    VqModel m(4, cfg, 9);
    ad::Tape tape;
    tape.backward(m.build_loss(tape, batch, mode));
    return m.params();
  };
  const ad::ParamSet none = grads(CoverageMode::kNone);
  const ad::ParamSet cvr = grads(CoverageMode::kCvr);
  const ad::ParamSet all = grads(CoverageMode::kCvrAll);
  for (std::size_t i = 0; i < none.size(); ++i) {
    if (none.name(i) == "codebook") continue;
    CHECK(none.grad(i) == cvr.grad(i));
    CHECK(none.grad(i) == all.grad(i));
  }
  CHECK_FALSE(none.grad("codebook") == cvr.grad("codebook"));
  // With cvr_all every code is pulled, with cvr only the timestep blocks.
  const ad::Tensor& gn = none.grad("codebook");
  const ad::Tensor& ga = all.grad("codebook");
  for (std::size_t j = 0; j < 16; ++j) {
    double diff = 0.0;
    for (std::size_t c = 0; c < 3; ++c) diff += std::abs(gn(j, c) - ga(j, c));
    CHECK(diff > 0.0);
  }
}

TEST_CASE("batched loss equals the mean of per-state losses") {
  VqConfig cfg;
  cfg.n_codes = 12;
  cfg.latent_dim = 2;
  cfg.encoder_hidden = {6};
  cfg.decoder_hidden = {6};
  VqModel m(3, cfg, 4);
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g;
  std::vector<double> a(5 * 3), b(3 * 3);
  for (auto& v : a) v = g(rng);
  for (auto& v : b) v = g(rng);
  const std::vector<StateSequence> batch = {{a, {}}, {b, {}}};
  for (CoverageMode mode : {CoverageMode::kNone, CoverageMode::kCvr, CoverageMode::kCvrAll}) {
    ad::Tape tape(ad::Tape::Mode::kInference);
    const double total = m.build_loss(tape, batch, mode).value().item();
    double expect = 0.0;
    for (std::size_t t = 0; t < 5; ++t) {
      expect += m.losses(std::span<const double>(a).subspan(3 * t, 3), t, 5, mode).total;
    }
    for (std::size_t t = 0; t < 3; ++t) {
      expect += m.losses(std::span<const double>(b).subspan(3 * t, 3), t, 3, mode).total;
    }
    CHECK(total == doctest::Approx(expect / 8.0).epsilon(1e-12));
  }
}

TEST_CASE("fitting reduces the loss on a fixed batch") {
  VqConfig cfg;
  cfg.n_codes = 8;
  cfg.latent_dim = 2;
  cfg.encoder_hidden = {16};
  cfg.decoder_hidden = {16};
  cfg.optimizer.step_size = 3e-3;
  VqModel m(2, cfg, 2);
  std::vector<double> states;
  for (int t = 0; t < 20; ++t) {
    states.push_back(std::cos(0.3 * t));
    states.push_back(std::sin(0.3 * t));
  }
  const StateSequence seq{states, {}};
  const std::span<const StateSequence> batch(&seq, 1);
  const double first = m.fit_batch(batch);
  double last = first;
  for (int i = 0; i < 300; ++i) last = m.fit_batch(batch);
  CHECK(last < 0.5 * first);
  CHECK(m.params().grads_finite());
}

TEST_CASE("cadence gates code-value and model updates") {
  VqConfig cfg;
  cfg.n_codes = 4;
  cfg.latent_dim = 2;
  cfg.encoder_hidden = {4};
  cfg.decoder_hidden = {4};
  VqModel m(2, cfg, 5);
  codebook::CodeValueTable values(4, 100);
  const std::vector<double> states = {0, 0, 1, 0, 1, 1};
  const std::vector<double> returns = {3.0, 2.0};
  const StateSequence seq{states, returns};
  const std::span<const StateSequence> batch(&seq, 1);
  const VqCadence cadence{10, 40};

  std::size_t model_steps = 0;
  std::size_t value_steps = 0;
  for (std::uint64_t c = 0; c < 80; ++c) {
    const VqStepReport r = train_vqvae_step(m, batch, c, cadence, values);
    model_steps += r.model_updated;
    value_steps += r.values_updated;
  }
  CHECK(model_steps == 8);
  CHECK(value_steps == 2);
  CHECK(m.optimizer().step == 8);
  std::uint64_t visits = 0;
  for (std::size_t j = 0; j < 4; ++j) visits += values.entry(j).visits;
  CHECK(visits == 4);

  const ad::ParamSet before = m.params();
  const VqStepReport none = train_vqvae_step(m, {}, 0, cadence, values);
  CHECK_FALSE(none.model_updated);
  CHECK(m.params().values_equal(before));
}

TEST_CASE("pca matches a reference eigen-decomposition") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> g;
  ad::Tensor pts(400, 4);
  for (std::size_t i = 0; i < 400; ++i) {
    const double a = 3.0 * g(rng), b = 1.0 * g(rng), c = 0.1 * g(rng);
    pts(i, 0) = a + 1.0;
    pts(i, 1) = a - b;
    pts(i, 2) = b + c;
    pts(i, 3) = c - 2.0;
  }
  const Pca2 p = fit_pca2(pts);
  Eigen::MatrixXd x(400, 4);
  for (std::size_t i = 0; i < 400; ++i)
    for (std::size_t j = 0; j < 4; ++j) x(static_cast<long>(i), static_cast<long>(j)) = pts(i, j);
  Eigen::MatrixXd cen = x.rowwise() - x.colwise().mean();
  Eigen::MatrixXd cov = cen.transpose() * cen / 400.0;
  for (std::size_t k = 0; k < 2; ++k) {
    Eigen::Map<const Eigen::VectorXd> v(p.axes[k].data(), 4);
    CHECK(v.norm() == doctest::Approx(1.0));
    const Eigen::VectorXd cv = cov * v;
    CHECK((cv - p.variance[k] * v).norm() < 1e-9);
  }
  CHECK(p.variance[0] >= p.variance[1]);
  double dot = 0.0;
  for (std::size_t c = 0; c < 4; ++c) dot += p.axes[0][c] * p.axes[1][c];
  CHECK(std::abs(dot) < 1e-9);
  const auto proj = p.project(p.mean);
  CHECK(std::abs(proj[0]) < 1e-12);
  CHECK(std::abs(proj[1]) < 1e-12);
}
