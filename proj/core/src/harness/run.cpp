#include "lagma/harness/run.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include "json.hpp"
#include "lagma/common/error.hpp"
#include "lagma/vq/pca.hpp"

namespace lagma::harness {

namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

/// Keeps the first `keep` complete lines of the metrics file.
void truncate_metrics(const fs::path& path, std::uint64_t keep) {
  std::string kept;
  if (fs::exists(path)) {
    std::istringstream in(read_text(path));
    std::string line;
    for (std::uint64_t i = 0; i < keep && std::getline(in, line); ++i) {
      if (in.eof()) break;
      kept += line + "\n";
    }
  }
  write_text(path, kept);
}

void write_timing(const fs::path& dir, double seconds) {
  nlohmann::ordered_json j;
  j["train_seconds"] = seconds;
  write_text(dir / kTimingFile, j.dump() + "\n");
}

}  // namespace

double training_seconds(const std::string& out_dir) {
  const fs::path path = fs::path(out_dir) / kTimingFile;
  if (!fs::exists(path)) return 0.0;
  return nlohmann::json::parse(read_text(path)).at("train_seconds").get<double>();
}

MetricsRecord parse_metrics_line(const std::string& line) {
  const auto j = nlohmann::json::parse(line);
  MetricsRecord r;
  r.step = j.at("step").get<std::uint64_t>();
  r.episodes = j.at("episodes").get<std::uint64_t>();
  r.train_steps = j.at("train_steps").get<std::uint64_t>();
  r.win_rate = j.at("win_rate").get<double>();
  r.test_return = j.at("test_return").get<double>();
  r.loss = j.at("loss").get<double>();
  r.vq_loss = j.at("vq_loss").get<double>();
  r.mean_intrinsic = j.at("mean_intrinsic").get<double>();
  r.intrinsic_nonzero = j.at("intrinsic_nonzero").get<double>();
  r.code_usage = j.at("code_usage").get<double>();
  r.epsilon = j.at("epsilon").get<double>();
  return r;
}

std::vector<MetricsRecord> read_metrics(const std::string& path) {
  std::istringstream in(read_text(path));
  std::vector<MetricsRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(parse_metrics_line(line));
  }
  return out;
}

MetricsRecord run_training(const ExperimentConfig& config, const std::string& out_dir, const RunOptions& options) {
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  const fs::path ckpt = dir / kCheckpointFile;
  const fs::path metrics = dir / kMetricsFile;
  const std::string config_text = format_config(config);

  std::optional<Trainer> trainer;
  double prior_seconds = 0.0;
  if (options.resume && fs::exists(ckpt)) {
    trainer.emplace(Trainer::load_checkpoint(ckpt.string()));
    if (format_config(trainer->config()) != config_text) {
      throw ConfigError("resume: the configuration differs from the one stored in '" + ckpt.string() + "'");
    }
    truncate_metrics(metrics, trainer->records());
    prior_seconds = training_seconds(out_dir);
    spdlog::info("resuming {} at step {} ({} records)", out_dir, trainer->env_steps(), trainer->records());
  } else {
    trainer.emplace(config);
    write_text(metrics, "");
    write_timing(dir, 0.0);
  }
  write_text(dir / kConfigFile, config_text);
  trainer->set_eval_threads(options.eval_threads);

  MetricsRecord last;
  if (trainer->finished()) {
    const auto records = read_metrics(metrics.string());
    if (records.empty()) throw Error("run in '" + out_dir + "' is finished but has no metrics");
    return records.back();
  }
  std::uint64_t produced = 0;
  const auto start = std::chrono::steady_clock::now();
  std::ofstream out(metrics, std::ios::app);
  if (!out) throw Error("cannot append to '" + metrics.string() + "'");
  while (!trainer->finished()) {
    last = trainer->advance();
    out << last.to_json() << '\n';
    out.flush();
    trainer->save_checkpoint(ckpt.string());
    write_timing(dir, prior_seconds + std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    if (options.max_records > 0 && ++produced >= options.max_records) break;
  }
  return last;
}

double median(std::vector<double> values) {
  if (values.empty()) throw Error("median of an empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::vector<AblationRun> run_ablation(const ExperimentConfig& base, std::span<const Variant> variants,
                                      std::span<const std::uint64_t> seeds, const std::string& out_dir,
                                      const RunOptions& options) {
  if (variants.empty() || seeds.empty()) throw ConfigError("ablate: need at least one variant and one seed");
  std::vector<AblationRun> runs;
  for (Variant v : variants) {
    for (std::uint64_t seed : seeds) {
      ExperimentConfig cfg = base;
      cfg.run.variant = v;
      cfg.run.seed = seed;
      const fs::path dir = fs::path(out_dir) / to_string(v) / ("seed-" + std::to_string(seed));
      RunOptions opt = options;
      opt.resume = true;
      AblationRun run{v, seed, run_training(cfg, dir.string(), opt), 0.0};
      run.seconds = training_seconds(dir.string());
      spdlog::info("ablate: {} seed {} final win rate {:.3f} ({:.0f} s)", to_string(v), seed,
                   run.final_record.win_rate, run.seconds);
      runs.push_back(run);
    }
  }
  std::ostringstream csv;
  csv << "variant,seed,step,win_rate,test_return,seconds\n";
  for (const auto& r : runs) {
    csv << to_string(r.variant) << ',' << r.seed << ',' << r.final_record.step << ',' << r.final_record.win_rate
        << ',' << r.final_record.test_return << ',' << r.seconds << '\n';
  }
  write_text(fs::path(out_dir) / "summary.csv", csv.str());
  return runs;
}

Diagnostics compute_diagnostics(const vq::VqModel& model, std::span<const marl::Episode* const> episodes) {
  std::size_t rows = 0;
  for (const auto* ep : episodes) rows += ep->states.size() / model.state_dim();
  if (rows == 0) throw Error("diagnostics: the episode sample holds no states");

  const std::size_t D = model.latent_dim();
  ad::Tensor latents(rows, D);
  std::vector<long long> step(rows);
  std::size_t r = 0;
  for (const auto* ep : episodes) {
    const ad::Tensor x = model.encode_states(ep->states);
    for (std::size_t t = 0; t < x.rows(); ++t, ++r) {
      std::copy(x.row_span(t).begin(), x.row_span(t).end(), latents.row_span(r).begin());
      step[r] = static_cast<long long>(t);
    }
  }

  Diagnostics d;
  d.code_counts.assign(model.n_codes(), 0);
  const vq::Pca2 pca = vq::fit_pca2(latents);
  double total_var = 0.0;
  for (std::size_t c = 0; c < D; ++c) {
    double m = 0.0;
    for (std::size_t i = 0; i < rows; ++i) m += latents(i, c);
    m /= static_cast<double>(rows);
    for (std::size_t i = 0; i < rows; ++i) total_var += (latents(i, c) - m) * (latents(i, c) - m);
  }
  total_var /= static_cast<double>(rows);
  for (int k = 0; k < 2; ++k) d.explained[k] = total_var > 0.0 ? pca.variance[k] / total_var : 0.0;

  for (std::size_t i = 0; i < rows; ++i) {
    const std::size_t z = model.nearest_code(latents.row_span(i));
    ++d.code_counts[z];
    const auto p = pca.project(latents.row_span(i));
    d.pca.push_back({step[i], z, p[0], p[1], false});
  }
  const ad::Tensor& codes = model.codebook();
  for (std::size_t j = 0; j < codes.rows(); ++j) {
    const auto p = pca.project(codes.row_span(j));
    d.pca.push_back({-1, j, p[0], p[1], true});
  }
  return d;
}

void write_diagnostics(const Diagnostics& diag, const std::string& out_dir) {
  fs::create_directories(out_dir);
  std::ostringstream pca;
  pca.precision(17);
  pca << "t,code_index,pc1,pc2,is_code_vector\n";
  for (const auto& row : diag.pca) {
    pca << row.t << ',' << row.code_index << ',' << row.pc1 << ',' << row.pc2 << ',' << (row.is_code_vector ? 1 : 0)
        << '\n';
  }
  write_text(fs::path(out_dir) / "pca.csv", pca.str());
  std::ostringstream hist;
  hist << "code_index,count\n";
  for (std::size_t j = 0; j < diag.code_counts.size(); ++j) hist << j << ',' << diag.code_counts[j] << '\n';
  write_text(fs::path(out_dir) / "code_usage.csv", hist.str());
}

void write_episodes_jsonl(std::span<const marl::Episode* const> episodes, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write '" + path + "'");
  for (const auto* ep : episodes) {
    nlohmann::ordered_json j;
    j["env_seed"] = ep->env_seed;
    j["length"] = ep->length();
    j["won"] = ep->won;
    j["terminated"] = ep->terminated;
    j["return"] = ep->total_reward();
    j["n_agents"] = ep->n_agents;
    j["actions"] = ep->actions;
    j["rewards"] = ep->rewards;
    j["state_dim"] = ep->state_dim;
    j["states"] = ep->states;
    out << j.dump() << '\n';
  }
}

}  // namespace lagma::harness
