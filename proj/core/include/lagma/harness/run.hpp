#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lagma/harness/config.hpp"
#include "lagma/harness/trainer.hpp"

namespace lagma::harness {

/// File names inside a run directory.
inline constexpr const char* kMetricsFile = "metrics.jsonl";
inline constexpr const char* kCheckpointFile = "checkpoint.lagma";
inline constexpr const char* kConfigFile = "config.ini";
/// Cumulative wall time spent training, kept outside the metrics stream.
inline constexpr const char* kTimingFile = "timing.json";

struct RunOptions {
  bool resume = false;
  std::size_t eval_threads = 1;
  /// Stop after this many metrics records (0 = run to the step budget).
  std::uint64_t max_records = 0;
};

/// Trains `config` in `out_dir`, appending one JSON line per evaluation to
/// metrics.jsonl and rewriting checkpoint.lagma after each. With resume set
/// and a checkpoint present, training continues from it and the metrics file
/// is cut back to the records the checkpoint has seen.
MetricsRecord run_training(const ExperimentConfig& config, const std::string& out_dir,
                           const RunOptions& options = {});

/// Training wall time recorded in out_dir, summed over resumed sessions.
double training_seconds(const std::string& out_dir);

std::vector<MetricsRecord> read_metrics(const std::string& path);
MetricsRecord parse_metrics_line(const std::string& line);

struct AblationRun {
  Variant variant = Variant::kLagma;
  std::uint64_t seed = 0;
  MetricsRecord final_record;
  /// Total training wall time of the run, including earlier sessions.
  double seconds = 0.0;
};

/// Trains every (variant, seed) pair into out_dir/<variant>/seed-<seed>.
/// Finished runs are read back instead of retrained and unfinished ones
/// resume. Writes out_dir/summary.csv.
std::vector<AblationRun> run_ablation(const ExperimentConfig& base, std::span<const Variant> variants,
                                      std::span<const std::uint64_t> seeds, const std::string& out_dir,
                                      const RunOptions& options = {});

double median(std::vector<double> values);

/// One embedded point of the diagnostics dump.
struct PcaRow {
  long long t = -1;  ///< timestep of a latent point, -1 for a code vector
  std::size_t code_index = 0;
  double pc1 = 0.0;
  double pc2 = 0.0;
  bool is_code_vector = false;
};

struct Diagnostics {
  std::vector<PcaRow> pca;
  /// Number of quantized timesteps assigned to each code.
  std::vector<std::uint64_t> code_counts;
  double explained[2] = {0.0, 0.0};
};

/// Encodes and quantizes every state of the episodes, projects latents and
/// code vectors onto the top two principal axes of the latents.
Diagnostics compute_diagnostics(const vq::VqModel& model, std::span<const marl::Episode* const> episodes);

/// Writes pca.csv and code_usage.csv into out_dir.
void write_diagnostics(const Diagnostics& diag, const std::string& out_dir);

/// Replay episodes as JSON lines (seed, actions, rewards, states, outcome).
void write_episodes_jsonl(std::span<const marl::Episode* const> episodes, const std::string& path);

}  // namespace lagma::harness
