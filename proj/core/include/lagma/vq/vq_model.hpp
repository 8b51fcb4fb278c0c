#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lagma/autodiff/layers.hpp"
#include "lagma/autodiff/optim.hpp"
#include "lagma/codebook/code_value_table.hpp"
#include "lagma/vq/indexing.hpp"

namespace lagma::vq {

/// Which coverage term pulls code vectors toward the embedded states.
enum class CoverageMode {
  kCvr,     ///< codes J(t) selected by timestep
  kCvrAll,  ///< every code at every timestep
  kNone,
};

std::string to_string(CoverageMode mode);
CoverageMode coverage_mode_from_string(const std::string& name);

struct VqConfig {
  std::size_t n_codes = 64;
  std::size_t latent_dim = 8;
  double lambda_vq = 1.0;
  double lambda_commit = 0.5;
  double lambda_cvr = 0.5;
  std::vector<std::size_t> encoder_hidden = {64, 64};
  std::vector<std::size_t> decoder_hidden = {64, 64};
  CoverageMode coverage = CoverageMode::kCvr;
  /// Standard deviation of the initial code vectors.
  double codebook_init_scale = 0.1;
  ad::AdamConfig optimizer;

  void validate() const;
};

struct Quantized {
  std::size_t index = 0;
  std::vector<double> code;
};

/// Loss terms averaged over the rows they were computed on.
struct VqLosses {
  double reconstruction = 0.0;
  double vq = 0.0;
  double commitment = 0.0;
  double coverage = 0.0;
  /// reconstruction + lambda_vq * vq + lambda_commit * commitment
  double vq_total = 0.0;
  /// vq_total + lambda_cvr * coverage
  double total = 0.0;
};

/// States of one episode for VQ training, row-major [n_states, state_dim].
/// `returns[t]` is the discounted return from state t; it may be shorter than
/// the state list (the final state usually has none).
struct StateSequence {
  std::span<const double> states;
  std::span<const double> returns;
};

struct VqCadence {
  std::uint64_t n_freq_vq = 10;
  std::uint64_t n_freq_cd = 40;
};

struct VqStepReport {
  bool values_updated = false;
  bool model_updated = false;
  double loss = 0.0;
};

/// Encoder f_phi (state -> latent), decoder f_psi (latent -> state) and a
/// trainable codebook of n_codes latent vectors, all in one ParamSet.
class VqModel {
 public:
  VqModel() = default;
  VqModel(std::size_t state_dim, VqConfig config, std::uint64_t seed);

  std::vector<double> encode(std::span<const double> state) const;
  /// Nearest code by Euclidean distance; ties go to the lowest index.
  Quantized quantize(std::span<const double> latent) const;
  std::size_t nearest_code(std::span<const double> latent) const;
  std::vector<double> decode(std::span<const double> code) const;

  /// encode + nearest code for every row of a [n, state_dim] block.
  std::vector<std::size_t> quantize_states(std::span<const double> states) const;
  /// Latents of every row of a [n, state_dim] block, row-major [n, D].
  ad::Tensor encode_states(std::span<const double> states) const;

  /// Loss terms of one state at timestep t of an episode of length T.
  VqLosses losses(std::span<const double> state, std::size_t t, std::size_t T,
                  CoverageMode mode) const;

  /// Mean total loss over all states of the sequences; records the graph on
  /// `tape` so that backward() reaches encoder, decoder and codebook.
  ad::Var build_loss(ad::Tape& tape, std::span<const StateSequence> batch, CoverageMode mode,
                     VqLosses* terms = nullptr);

  /// One optimizer step on the mean total loss of the batch.
  double fit_batch(std::span<const StateSequence> batch);

  const VqConfig& config() const { return config_; }
  std::size_t state_dim() const { return state_dim_; }
  std::size_t n_codes() const { return config_.n_codes; }
  std::size_t latent_dim() const { return config_.latent_dim; }
  const ad::Tensor& codebook() const { return params_.value(codebook_); }

  ad::ParamSet& params() { return params_; }
  const ad::ParamSet& params() const { return params_; }
  ad::AdamState& optimizer() { return optim_; }
  const ad::AdamState& optimizer() const { return optim_; }
  const ad::Mlp& encoder() const { return encoder_; }
  const ad::Mlp& decoder() const { return decoder_; }
  std::size_t codebook_param() const { return codebook_; }

 private:
  template <typename Params>
  ad::Var build_loss_impl(ad::Tape& tape, Params& params, std::span<const StateSequence> batch,
                          CoverageMode mode, VqLosses* terms) const;

  std::size_t state_dim_ = 0;
  VqConfig config_;
  ad::ParamSet params_;
  ad::Mlp encoder_;
  ad::Mlp decoder_;
  std::size_t codebook_ = 0;
  ad::AdamState optim_;
};

/// Cadence-gated VQ-VAE update: code values from returns when the counter is
/// a multiple of n_freq_cd, one optimizer step when it is a multiple of n_freq_vq.
VqStepReport train_vqvae_step(VqModel& model, std::span<const StateSequence> batch,
                              std::uint64_t counter, const VqCadence& cadence,
                              codebook::CodeValueTable& values);

}  // namespace lagma::vq
