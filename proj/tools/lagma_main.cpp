// Command line front end: train, eval, ablate and diag.

#include <spdlog/spdlog.h>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "lagma/common/error.hpp"
#include "lagma/common/runtime.hpp"
#include "lagma/harness/config.hpp"
#include "lagma/harness/run.hpp"
#include "lagma/harness/trainer.hpp"

namespace fs = std::filesystem;
using namespace lagma::harness;

namespace {

void setup_logging() {
  spdlog::set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
  const char* level = std::getenv("LAGMA_LOG");
  if (level == nullptr || *level == '\0') {
    spdlog::set_level(spdlog::level::info);
    return;
  }
  const auto parsed = spdlog::level::from_str(level);
  if (parsed == spdlog::level::off && std::string(level) != "off") {
    spdlog::set_level(spdlog::level::info);
    spdlog::warn("LAGMA_LOG='{}' is not a level (trace, debug, info, warn, error, critical, off)", level);
    return;
  }
  spdlog::set_level(parsed);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<const lagma::marl::Episode*> replay_sample(const Trainer& t, std::size_t n) {
  std::vector<const lagma::marl::Episode*> out;
  const std::size_t size = t.replay().size();
  for (std::size_t i = size > n ? size - n : 0; i < size; ++i) out.push_back(&t.replay().at(i));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  lagma::configure_allocator();
  setup_logging();
  CLI::App app{"Latent goal guided multi-agent reinforcement learning"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string ckpt_path;
  std::uint64_t seed = 0;
  bool resume = false;
  std::size_t episodes = 32;
  std::size_t eval_threads = 1;
  std::uint64_t round = 0;
  std::string variants_text;
  std::string seeds_text;
  std::size_t diag_episodes = 64;

  auto* train = app.add_subcommand("train", "Train one run");
  train->add_option("--config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  train->add_option("--seed", seed, "Run seed (overrides the config)")->required();
  train->add_option("--out", out_dir, "Run directory")->required();
  train->add_flag("--resume", resume, "Continue from the run directory's checkpoint");
  train->add_option("--parallel-eval", eval_threads, "Evaluation worker threads");

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint greedily");
  eval->add_option("--ckpt", ckpt_path, "Checkpoint file")->required()->check(CLI::ExistingFile);
  eval->add_option("--episodes", episodes, "Evaluation episodes")->check(CLI::PositiveNumber);
  eval->add_option("--parallel-eval", eval_threads, "Evaluation worker threads");
  eval->add_option("--round", round, "Evaluation seed round");

  auto* ablate = app.add_subcommand("ablate", "Train every variant for every seed");
  ablate->add_option("--config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  ablate->add_option("--variants", variants_text, "Comma separated variants")->required();
  ablate->add_option("--seeds", seeds_text, "Comma separated seeds")->required();
  ablate->add_option("--out", out_dir, "Output directory")->default_val("ablation");
  ablate->add_option("--parallel-eval", eval_threads, "Evaluation worker threads");

  auto* diag = app.add_subcommand("diag", "Dump embedding diagnostics of a checkpoint");
  diag->add_option("--ckpt", ckpt_path, "Checkpoint file")->required()->check(CLI::ExistingFile);
  diag->add_option("--out", out_dir, "Output directory")->required();
  diag->add_option("--episodes", diag_episodes, "Most recent replay episodes to embed")
      ->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      ExperimentConfig cfg = load_config(config_path);
      cfg.run.seed = seed;
      cfg.validate();
      RunOptions opt;
      opt.resume = resume;
      opt.eval_threads = eval_threads;
      const MetricsRecord last = run_training(cfg, out_dir, opt);
      std::cout << last.to_json() << '\n';
    } else if (*eval) {
      const Trainer t = Trainer::load_checkpoint(ckpt_path);
      const EvalResult r = t.evaluate(episodes, (std::uint64_t{1} << 30) + round, eval_threads);
      nlohmann::ordered_json j;
      j["episodes"] = r.episodes;
      j["wins"] = r.wins;
      j["win_rate"] = r.win_rate;
      j["mean_return"] = r.mean_return;
      std::cout << j.dump() << '\n';
    } else if (*ablate) {
      const ExperimentConfig cfg = load_config(config_path);
      std::vector<Variant> variants;
      for (const auto& v : split_list(variants_text)) variants.push_back(variant_from_string(v));
      std::vector<std::uint64_t> seeds;
      for (const auto& s : split_list(seeds_text)) {
        std::size_t pos = 0;
        seeds.push_back(std::stoull(s, &pos));
        if (pos != s.size()) throw lagma::ConfigError("ablate: bad seed '" + s + "'");
      }
      RunOptions opt;
      opt.eval_threads = eval_threads;
      const auto runs = run_ablation(cfg, variants, seeds, out_dir, opt);
      for (Variant v : variants) {
        std::vector<double> wins;
        for (const auto& r : runs) {
          if (r.variant == v) wins.push_back(r.final_record.win_rate);
        }
        std::cout << to_string(v) << " median_win_rate=" << median(wins) << '\n';
      }
    } else if (*diag) {
      const Trainer t = Trainer::load_checkpoint(ckpt_path);
      const auto sample = replay_sample(t, diag_episodes);
      if (sample.empty()) throw lagma::Error("diag: the checkpoint's replay buffer is empty");
      const Diagnostics d = compute_diagnostics(t.vq_model(), sample);
      write_diagnostics(d, out_dir);
      write_episodes_jsonl(sample, (fs::path(out_dir) / "episodes.jsonl").string());
      std::size_t used = 0;
      for (auto c : d.code_counts) used += c > 0 ? 1 : 0;
      std::cout << "codes used " << used << " of " << d.code_counts.size() << ", explained variance "
                << d.explained[0] << ' ' << d.explained[1] << '\n';
    }
  } catch (const lagma::Error& e) {
    spdlog::error("{}", e.what());
    return 1;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
