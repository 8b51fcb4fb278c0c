#include "lagma/vq/vq_model.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <limits>
#include <random>

#include "lagma/common/error.hpp"

namespace lagma::vq {

using ad::Tape;
using ad::Tensor;
using ad::Var;

std::string to_string(CoverageMode mode) {
  switch (mode) {
    case CoverageMode::kCvr: return "cvr";
    case CoverageMode::kCvrAll: return "cvr_all";
    case CoverageMode::kNone: return "none";
  }
  return "unknown";
}

CoverageMode coverage_mode_from_string(const std::string& name) {
  if (name == "cvr") return CoverageMode::kCvr;
  if (name == "cvr_all") return CoverageMode::kCvrAll;
  if (name == "none") return CoverageMode::kNone;
  throw ConfigError("vq: unknown coverage mode '" + name + "' (expected cvr, cvr_all or none)");
}

void VqConfig::validate() const {
  if (n_codes == 0) throw ConfigError("vq: n_codes must be >= 1");
  if (latent_dim == 0) throw ConfigError("vq: latent_dim must be >= 1");
  if (lambda_vq < 0.0 || lambda_commit < 0.0 || lambda_cvr < 0.0) {
    throw ConfigError("vq: loss scales must be non-negative");
  }
}

VqModel::VqModel(std::size_t state_dim, VqConfig config, std::uint64_t seed)
    : state_dim_(state_dim), config_(std::move(config)) {
  config_.validate();
  if (state_dim == 0) throw ConfigError("vq: state dimension must be >= 1");
  std::mt19937_64 rng(seed);
  encoder_ = ad::Mlp::create(params_, "encoder", state_dim, config_.encoder_hidden,
                             config_.latent_dim, ad::Activation::kRelu, rng);
  decoder_ = ad::Mlp::create(params_, "decoder", config_.latent_dim, config_.decoder_hidden,
                             state_dim, ad::Activation::kRelu, rng);
  Tensor codes(config_.n_codes, config_.latent_dim);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& v : codes.data()) v = config_.codebook_init_scale * normal(rng);
  codebook_ = params_.add("codebook", std::move(codes));
  optim_ = ad::AdamState(params_, config_.optimizer);
}

Tensor VqModel::encode_states(std::span<const double> states) const {
  if (states.size() % state_dim_ != 0) {
    throw ShapeError("encode: " + std::to_string(states.size()) +
                     " values is not a multiple of state dimension " + std::to_string(state_dim_));
  }
  const std::size_t n = states.size() / state_dim_;
  Tape tape(Tape::Mode::kInference);
  Var s = tape.constant(Tensor(n, state_dim_, std::vector<double>(states.begin(), states.end())));
  return encoder_.forward(tape, params_, s).value();
}

std::vector<double> VqModel::encode(std::span<const double> state) const {
  if (state.size() != state_dim_) {
    throw ShapeError("encode: state of dimension " + std::to_string(state.size()) +
                     ", expected " + std::to_string(state_dim_));
  }
  const Tensor x = encode_states(state);
  return {x.data().begin(), x.data().end()};
}

std::size_t VqModel::nearest_code(std::span<const double> latent) const {
  if (latent.size() != config_.latent_dim) {
    throw ShapeError("quantize: latent of dimension " + std::to_string(latent.size()) +
                     ", expected " + std::to_string(config_.latent_dim));
  }
  const Tensor& codes = codebook();
  std::size_t best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < codes.rows(); ++j) {
    auto e = codes.row_span(j);
    double d = 0.0;
    for (std::size_t c = 0; c < e.size(); ++c) {
      const double diff = latent[c] - e[c];
      d += diff * diff;
    }
    if (d < best_dist) {
      best_dist = d;
      best = j;
    }
  }
  return best;
}

Quantized VqModel::quantize(std::span<const double> latent) const {
  Quantized q;
  q.index = nearest_code(latent);
  auto row = codebook().row_span(q.index);
  q.code.assign(row.begin(), row.end());
  return q;
}

std::vector<double> VqModel::decode(std::span<const double> code) const {
  if (code.size() != config_.latent_dim) {
    throw ShapeError("decode: input of dimension " + std::to_string(code.size()) +
                     ", expected " + std::to_string(config_.latent_dim));
  }
  Tape tape(Tape::Mode::kInference);
  Var x = tape.constant(Tensor::row(code));
  const Tensor y = decoder_.forward(tape, params_, x).value();
  return {y.data().begin(), y.data().end()};
}

std::vector<std::size_t> VqModel::quantize_states(std::span<const double> states) const {
  const Tensor x = encode_states(states);
  std::vector<std::size_t> out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) out[r] = nearest_code(x.row_span(r));
  return out;
}

template <typename Params>
Var VqModel::build_loss_impl(Tape& tape, Params& params, std::span<const StateSequence> batch,
                             CoverageMode mode, VqLosses* terms) const {
  std::size_t rows = 0;
  for (const auto& seq : batch) {
    if (seq.states.size() % state_dim_ != 0) {
      throw ShapeError("vq loss: state block is not a multiple of the state dimension");
    }
    rows += seq.states.size() / state_dim_;
  }
  if (rows == 0) throw Error("vq loss: empty batch");

  Tensor s(rows, state_dim_);
  std::vector<std::size_t> step(rows);
  std::vector<std::size_t> horizon(rows);
  std::size_t r = 0;
  for (const auto& seq : batch) {
    const std::size_t n = seq.states.size() / state_dim_;
    std::copy(seq.states.begin(), seq.states.end(),
              s.data().begin() + static_cast<std::ptrdiff_t>(r * state_dim_));
    for (std::size_t t = 0; t < n; ++t, ++r) {
      step[r] = t;
      horizon[r] = n;
    }
  }

  Var states = tape.constant(std::move(s));
  Var x = encoder_.forward(tape, params, states);
  std::vector<std::size_t> z(rows);
  for (std::size_t i = 0; i < rows; ++i) z[i] = nearest_code(x.value().row_span(i));

  Var codes = tape.param(params, codebook_);
  Var xq = ad::gather_rows(codes, z);
  Var recon = ad::sq_dist_rows(decoder_.forward(tape, params, ad::straight_through(xq, x)), states);
  Var x_sg = ad::stop_gradient(x);
  Var vq_term = ad::sq_dist_rows(x_sg, xq);
  Var commit = ad::sq_dist_rows(x, ad::stop_gradient(xq));

  const Tensor row_w(rows, 1, 1.0 / static_cast<double>(rows));
  Var l_recon = ad::weighted_sum(recon, row_w);
  Var l_vq = ad::weighted_sum(vq_term, row_w);
  Var l_commit = ad::weighted_sum(commit, row_w);
  Var total = l_recon + ad::affine(l_vq, config_.lambda_vq) +
              ad::affine(l_commit, config_.lambda_commit);
  double coverage = 0.0;

  if (mode != CoverageMode::kNone) {
    std::vector<std::size_t> pair_row;
    std::vector<std::size_t> pair_code;
    std::vector<double> pair_w;
    for (std::size_t i = 0; i < rows; ++i) {
      IndexSet idx;
      if (mode == CoverageMode::kCvr) {
        idx = timestep_indices(step[i], horizon[i], config_.n_codes);
      } else {
        idx.resize(config_.n_codes);
        for (std::size_t j = 0; j < idx.size(); ++j) idx[j] = j;
      }
      const double w = 1.0 / (static_cast<double>(idx.size()) * static_cast<double>(rows));
      for (std::size_t j : idx) {
        pair_row.push_back(i);
        pair_code.push_back(j);
        pair_w.push_back(w);
      }
    }
    Var d = ad::sq_dist_rows(ad::gather_rows(x_sg, pair_row), ad::gather_rows(codes, pair_code));
    const std::size_t n_pairs = pair_w.size();
    Var l_cvr = ad::weighted_sum(d, Tensor(n_pairs, 1, std::move(pair_w)));
    coverage = l_cvr.value().item();
    total = total + ad::affine(l_cvr, config_.lambda_cvr);
  }

  if (terms != nullptr) {
    terms->reconstruction = l_recon.value().item();
    terms->vq = l_vq.value().item();
    terms->commitment = l_commit.value().item();
    terms->coverage = coverage;
    terms->vq_total = terms->reconstruction + config_.lambda_vq * terms->vq +
                      config_.lambda_commit * terms->commitment;
    terms->total = total.value().item();
  }
  return total;
}

Var VqModel::build_loss(Tape& tape, std::span<const StateSequence> batch, CoverageMode mode,
                        VqLosses* terms) {
  return build_loss_impl(tape, params_, batch, mode, terms);
}

VqLosses VqModel::losses(std::span<const double> state, std::size_t t, std::size_t T,
                         CoverageMode mode) const {
  if (state.size() != state_dim_) {
    throw ShapeError("vq loss: state of dimension " + std::to_string(state.size()) +
                     ", expected " + std::to_string(state_dim_));
  }
  if (t >= T) throw Error("vq loss: timestep outside the episode");
  std::vector<double> row(state.begin(), state.end());
  VqLosses out;
  Tape tape(Tape::Mode::kInference);
  if (mode == CoverageMode::kCvr) {
    // A lone row would be read as t = 0 of a length-1 episode, so the
    // coverage term is computed here with the caller's (t, T).
    const StateSequence single{row, {}};
    build_loss_impl(tape, params_, std::span<const StateSequence>(&single, 1),
                    CoverageMode::kNone, &out);
    const Tensor x = encode_states(row);
    const IndexSet idx = timestep_indices(t, T, config_.n_codes);
    double cvr = 0.0;
    for (std::size_t j : idx) {
      auto e = codebook().row_span(j);
      for (std::size_t c = 0; c < e.size(); ++c) cvr += (x[c] - e[c]) * (x[c] - e[c]);
    }
    out.coverage = cvr / static_cast<double>(idx.size());
    out.total = out.vq_total + config_.lambda_cvr * out.coverage;
    return out;
  }
  const StateSequence single{row, {}};
  build_loss_impl(tape, params_, std::span<const StateSequence>(&single, 1), mode, &out);
  return out;
}

double VqModel::fit_batch(std::span<const StateSequence> batch) {
  params_.zero_grad();
  Tape tape;
  Var loss = build_loss(tape, batch, config_.coverage);
  const double value = loss.value().item();
  tape.backward(loss);
  ad::adam_step(params_, optim_);
  return value;
}

VqStepReport train_vqvae_step(VqModel& model, std::span<const StateSequence> batch,
                              std::uint64_t counter, const VqCadence& cadence,
                              codebook::CodeValueTable& values) {
  VqStepReport report;
  if (batch.empty()) {
    spdlog::warn("train_vqvae_step: empty batch, nothing to do");
    return report;
  }
  if (cadence.n_freq_cd > 0 && counter % cadence.n_freq_cd == 0) {
    for (const auto& seq : batch) {
      const std::size_t n = seq.returns.size();
      if (n == 0) continue;
      const auto z = model.quantize_states(seq.states.first(n * model.state_dim()));
      for (std::size_t t = 0; t < n; ++t) values.update(z[t], seq.returns[t]);
    }
    report.values_updated = true;
  }
  if (cadence.n_freq_vq > 0 && counter % cadence.n_freq_vq == 0) {
    report.loss = model.fit_batch(batch);
    report.model_updated = true;
  }
  return report;
}

}  // namespace lagma::vq
