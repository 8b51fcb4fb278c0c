#include "lagma/intrinsic/intrinsic.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>

#include "lagma/common/error.hpp"

namespace lagma::intrinsic {

std::string to_string(IntrinsicMode mode) {
  switch (mode) {
    case IntrinsicMode::kCqt: return "cqt";
    case IntrinsicMode::kCq0: return "cq0";
    case IntrinsicMode::kCqtNoUpd: return "cqt_no_upd";
  }
  return "unknown";
}

IntrinsicMode intrinsic_mode_from_string(const std::string& name) {
  if (name == "cqt") return IntrinsicMode::kCqt;
  if (name == "cq0") return IntrinsicMode::kCq0;
  if (name == "cqt_no_upd") return IntrinsicMode::kCqtNoUpd;
  throw ConfigError("intrinsic: unknown mode '" + name + "' (expected cqt, cq0 or cqt_no_upd)");
}

void IntrinsicConfig::validate() const {
  if (n_freq == 0) throw ConfigError("intrinsic: n_freq must be >= 1");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("intrinsic: gamma must be in [0, 1)");
}

IntrinsicTrace generate_intrinsic(const EpisodeCodes& episode, codebook::SequenceBuffer& buffer,
                                  const codebook::CodeValueTable& values,
                                  const IntrinsicConfig& config, std::mt19937_64& rng) {
  config.validate();
  const std::size_t n = episode.codes.size();
  if (episode.returns.size() != n || episode.target_max_q.size() != n) {
    throw ShapeError("intrinsic: episode has " + std::to_string(n) + " codes, " +
                     std::to_string(episode.returns.size()) + " returns and " +
                     std::to_string(episode.target_max_q.size()) + " target values");
  }
  IntrinsicTrace trace;
  trace.reward.assign(n, 0.0);
  trace.on_reference.assign(n, 0);
  trace.code_changed.assign(n, 0);
  trace.resampled.assign(n, 0);

  std::vector<std::size_t> reference;
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t z = episode.codes[t];
    const bool refresh = config.mode == IntrinsicMode::kCqtNoUpd ? t == 0 : t % config.n_freq == 0;
    if (refresh) {
      const double key =
          config.mode == IntrinsicMode::kCq0 ? episode.episode_return : episode.returns[t];
      buffer.update(key, codebook::QuantizedTrajectory(episode.codes.begin() + static_cast<std::ptrdiff_t>(t),
                                                       episode.codes.end()));
      auto sampled = buffer.sample(z, rng);
      reference = sampled ? std::move(*sampled) : std::vector<std::size_t>{};
      trace.resampled[t] = 1;
      continue;
    }
    const bool on_ref = std::find(reference.begin(), reference.end(), z) != reference.end();
    const bool changed = z != episode.codes[t - 1];
    trace.on_reference[t] = on_ref;
    trace.code_changed[t] = changed;
    if (!on_ref || !changed) continue;
    double c = 0.0;
    if (auto v = values.value(z)) {
      c = *v;
    } else {
      ++trace.missing_values;
    }
    double r = config.gamma * (c - episode.target_max_q[t]);
    if (config.clamp) r = std::max(r, 0.0);
    trace.reward[t - 1] = r;
  }
  return trace;
}

std::vector<IntrinsicTrace> generate_intrinsic_batch(std::span<const EpisodeCodes> batch,
                                                     codebook::SequenceBuffer& buffer,
                                                     const codebook::CodeValueTable& values,
                                                     const IntrinsicConfig& config,
                                                     std::mt19937_64& rng, IntrinsicStats* stats) {
  std::vector<IntrinsicTrace> out;
  out.reserve(batch.size());
  std::size_t missing = 0;
  std::size_t count = 0;
  std::size_t nonzero = 0;
  double total = 0.0;
  for (const auto& ep : batch) {
    out.push_back(generate_intrinsic(ep, buffer, values, config, rng));
    missing += out.back().missing_values;
    for (double r : out.back().reward) {
      total += r;
      nonzero += r != 0.0;
    }
    count += out.back().reward.size();
  }
  if (missing > 0) {
    spdlog::debug("intrinsic: {} on-reference codes without a value estimate, used 0", missing);
  }
  if (stats != nullptr) {
    stats->mean = count > 0 ? total / static_cast<double>(count) : 0.0;
    stats->nonzero_fraction = count > 0 ? static_cast<double>(nonzero) / static_cast<double>(count) : 0.0;
    stats->missing_values = missing;
  }
  return out;
}

double proposition1_target(double reward, double c_next, double gamma) {
  return reward + gamma * c_next;
}

}  // namespace lagma::intrinsic
