#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "lagma/codebook/code_value_table.hpp"
#include "lagma/codebook/sequence_buffer.hpp"

namespace lagma::intrinsic {

enum class IntrinsicMode {
  kCqt,       ///< heap keys are discounted returns R_t
  kCq0,       ///< heap keys are the undiscounted return of the whole episode
  kCqtNoUpd,  ///< reference sampled once at t = 0 and never refreshed
};

std::string to_string(IntrinsicMode mode);
IntrinsicMode intrinsic_mode_from_string(const std::string& name);

struct IntrinsicConfig {
  std::size_t n_freq = 5;
  double gamma = 0.99;
  bool clamp = true;
  IntrinsicMode mode = IntrinsicMode::kCqt;

  void validate() const;
};

/// Quantized view of one episode: codes[t] and discounted returns[t] of the
/// non-final states s_0 .. s_{L-1}, and maxQ of the target network there.
struct EpisodeCodes {
  std::span<const std::size_t> codes;
  std::span<const double> returns;
  std::span<const double> target_max_q;
  /// Undiscounted reward sum of the episode, the heap key in cq0 mode.
  double episode_return = 0.0;
};

/// reward[t] augments the TD target of transition t (s_t -> s_{t+1}).
struct IntrinsicTrace {
  std::vector<double> reward;
  /// Flags are indexed by the inspected state, not by the emission index.
  std::vector<std::uint8_t> on_reference;
  std::vector<std::uint8_t> code_changed;
  std::vector<std::uint8_t> resampled;
  /// Inspected codes whose value entry was empty (C taken as 0).
  std::size_t missing_values = 0;
};

struct IntrinsicStats {
  double mean = 0.0;
  double nonzero_fraction = 0.0;
  std::size_t missing_values = 0;
};

/// Walks one episode: every n_freq steps offers the suffix z_t.. to the
/// sequence buffer and resamples a reference from the heap of z_t; on the
/// other steps, entering a new code that lies on the reference pays
/// gamma * (C(z_t) - maxQ(s_t)) to the previous transition.
IntrinsicTrace generate_intrinsic(const EpisodeCodes& episode, codebook::SequenceBuffer& buffer,
                                  const codebook::CodeValueTable& values,
                                  const IntrinsicConfig& config, std::mt19937_64& rng);

/// generate_intrinsic over a batch in order; logs missing code values once.
std::vector<IntrinsicTrace> generate_intrinsic_batch(std::span<const EpisodeCodes> batch,
                                                     codebook::SequenceBuffer& buffer,
                                                     const codebook::CodeValueTable& values,
                                                     const IntrinsicConfig& config,
                                                     std::mt19937_64& rng,
                                                     IntrinsicStats* stats = nullptr);

/// r + gamma * C_next, which y + r^I reduces to without clamping.
double proposition1_target(double reward, double c_next, double gamma);

}  // namespace lagma::intrinsic
