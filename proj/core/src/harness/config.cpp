#include "lagma/harness/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "lagma/common/error.hpp"

namespace lagma::harness {

namespace pt = boost::property_tree;

std::string to_string(Variant v) {
  switch (v) {
    case Variant::kLagma: return "lagma";
    case Variant::kQmixBaseline: return "qmix_baseline";
    case Variant::kNoCl: return "no_cl";
    case Variant::kClAll: return "cl_all";
    case Variant::kCq0: return "cq0";
    case Variant::kCqtNoUpd: return "cqt_no_upd";
  }
  return "unknown";
}

const std::vector<Variant>& all_variants() {
  static const std::vector<Variant> v = {Variant::kLagma, Variant::kQmixBaseline, Variant::kNoCl,
                                         Variant::kClAll, Variant::kCq0,          Variant::kCqtNoUpd};
  return v;
}

Variant variant_from_string(const std::string& name) {
  for (Variant v : all_variants()) {
    if (to_string(v) == name) return v;
  }
  throw ConfigError("config: unknown variant '" + name +
                    "' (expected lagma, qmix_baseline, no_cl, cl_all, cq0 or cqt_no_upd)");
}

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError("config: " + message);
}

template <typename T>
void recommended(const char* key, T value, T lo, T hi) {
  if (value < lo || value > hi) {
    std::ostringstream os;
    os << "config: " << key << " = " << value << " is outside the recommended range " << lo << "-"
       << hi;
    throw ConfigError(os.str());
  }
}

std::string join(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& raw) {
  const std::string text = trim(raw);
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || text.empty()) {
    throw ConfigError("config: " + key + " = '" + raw + "' is not a valid number");
  }
  return value;
}

bool parse_bool(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config: " + key + " = '" + raw + "' is not a boolean");
}

std::vector<std::size_t> parse_list(const std::string& key, const std::string& raw) {
  std::vector<std::size_t> out;
  std::stringstream ss(raw);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (trim(item).empty()) continue;
    out.push_back(parse_number<std::size_t>(key, item));
  }
  return out;
}

std::string fmt_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

struct Key {
  std::string section;
  std::string name;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define LAGMA_NUM(section, name, field, type)                                                    \
  Key {                                                                                          \
    section, name,                                                                               \
        [](ExperimentConfig& c, const std::string& v) { c.field = parse_number<type>(name, v); }, \
        [](const ExperimentConfig& c) {                                                          \
          if constexpr (std::is_floating_point_v<type>) return fmt_double(c.field);              \
          else return std::to_string(c.field);                                                   \
        }                                                                                        \
  }

#define LAGMA_BOOL(section, name, field)                                                     \
  Key {                                                                                      \
    section, name, [](ExperimentConfig& c, const std::string& v) { c.field = parse_bool(name, v); }, \
        [](const ExperimentConfig& c) { return std::string(c.field ? "true" : "false"); }    \
  }

const std::vector<Key>& keys() {
  static const std::vector<Key> k = {
      Key{"env", "kind",
          [](ExperimentConfig& c, const std::string& v) { c.env.kind = envs::env_kind_from_string(trim(v)); },
          [](const ExperimentConfig& c) { return envs::to_string(c.env.kind); }},
      LAGMA_NUM("env", "n_agents", env.n_agents, std::size_t),
      LAGMA_NUM("env", "width", env.width, std::size_t),
      LAGMA_NUM("env", "height", env.height, std::size_t),
      LAGMA_NUM("env", "n_targets", env.n_targets, std::size_t),
      LAGMA_NUM("env", "obs_radius", env.obs_radius, std::size_t),
      LAGMA_NUM("env", "episode_limit", env.episode_limit, std::size_t),
      LAGMA_NUM("env", "capture_agents", env.capture_agents, std::size_t),
      LAGMA_BOOL("env", "auto_capture", env.auto_capture),
      LAGMA_NUM("env", "hazard_cells", env.hazard_cells, std::size_t),
      LAGMA_NUM("env", "target_reward", env.target_reward, double),
      LAGMA_NUM("env", "win_reward", env.win_reward, double),
      LAGMA_NUM("env", "disable_penalty", env.disable_penalty, double),
      LAGMA_NUM("env", "corridor_length", env.corridor_length, std::size_t),

      LAGMA_NUM("vq", "n_c", vq.n_codes, std::size_t),
      LAGMA_NUM("vq", "latent_dim", vq.latent_dim, std::size_t),
      LAGMA_NUM("vq", "lambda_vq", vq.lambda_vq, double),
      LAGMA_NUM("vq", "lambda_commit", vq.lambda_commit, double),
      LAGMA_NUM("vq", "lambda_cvr", vq.lambda_cvr, double),
      Key{"vq", "encoder_hidden",
          [](ExperimentConfig& c, const std::string& v) { c.vq.encoder_hidden = parse_list("encoder_hidden", v); },
          [](const ExperimentConfig& c) { return join(c.vq.encoder_hidden); }},
      Key{"vq", "decoder_hidden",
          [](ExperimentConfig& c, const std::string& v) { c.vq.decoder_hidden = parse_list("decoder_hidden", v); },
          [](const ExperimentConfig& c) { return join(c.vq.decoder_hidden); }},
      Key{"vq", "coverage",
          [](ExperimentConfig& c, const std::string& v) { c.vq.coverage = vq::coverage_mode_from_string(trim(v)); },
          [](const ExperimentConfig& c) { return vq::to_string(c.vq.coverage); }},
      LAGMA_NUM("vq", "learning_rate", vq.optimizer.step_size, double),
      LAGMA_NUM("vq", "n_freq_vq", cadence.n_freq_vq, std::uint64_t),
      LAGMA_NUM("vq", "n_freq_cd", cadence.n_freq_cd, std::uint64_t),
      LAGMA_NUM("vq", "k", seq_k, std::size_t),
      LAGMA_NUM("vq", "m", code_buffer, std::size_t),

      LAGMA_NUM("intrinsic", "n_freq", intrinsic.n_freq, std::size_t),
      LAGMA_BOOL("intrinsic", "clamp", intrinsic.clamp),
      Key{"intrinsic", "mode",
          [](ExperimentConfig& c, const std::string& v) { c.intrinsic.mode = intrinsic::intrinsic_mode_from_string(trim(v)); },
          [](const ExperimentConfig& c) { return intrinsic::to_string(c.intrinsic.mode); }},

      LAGMA_NUM("learner", "gamma", learner.gamma, double),
      LAGMA_NUM("learner", "reward_scale", learner.reward_scale, double),
      LAGMA_NUM("learner", "batch_size", learner.batch_size, std::size_t),
      LAGMA_NUM("learner", "target_update_interval", learner.target_update_interval, std::size_t),
      LAGMA_NUM("learner", "replay_capacity", learner.replay_capacity, std::size_t),
      LAGMA_NUM("learner", "epsilon_start", learner.epsilon_start, double),
      LAGMA_NUM("learner", "epsilon_end", learner.epsilon_end, double),
      LAGMA_NUM("learner", "epsilon_anneal_steps", learner.epsilon_anneal_steps, std::uint64_t),
      LAGMA_BOOL("learner", "double_q", learner.double_q),
      LAGMA_NUM("learner", "agent_hidden", learner.agent_hidden, std::size_t),
      Key{"learner", "mixer",
          [](ExperimentConfig& c, const std::string& v) { c.learner.mixer = marl::mixer_kind_from_string(trim(v)); },
          [](const ExperimentConfig& c) { return marl::to_string(c.learner.mixer); }},
      LAGMA_NUM("learner", "mixer_embed", learner.mixer_embed, std::size_t),
      LAGMA_NUM("learner", "hypernet_hidden", learner.hypernet_hidden, std::size_t),
      LAGMA_NUM("learner", "learning_rate", learner.optimizer.step_size, double),
      LAGMA_NUM("learner", "grad_clip", learner.optimizer.clip_norm, double),

      LAGMA_NUM("run", "total_env_steps", run.total_env_steps, std::uint64_t),
      LAGMA_NUM("run", "eval_interval", run.eval_interval, std::uint64_t),
      LAGMA_NUM("run", "eval_episodes", run.eval_episodes, std::size_t),
      LAGMA_NUM("run", "seed", run.seed, std::uint64_t),
      Key{"run", "variant",
          [](ExperimentConfig& c, const std::string& v) { c.run.variant = variant_from_string(trim(v)); },
          [](const ExperimentConfig& c) { return to_string(c.run.variant); }},
  };
  return k;
}

#undef LAGMA_NUM
#undef LAGMA_BOOL

const Key* find_key(const std::string& section, const std::string& name) {
  for (const Key& k : keys()) {
    if (k.name == name && (section.empty() || section == k.section)) return &k;
  }
  return nullptr;
}

}  // namespace

vq::VqConfig default_vq_config() {
  vq::VqConfig c;
  c.optimizer.step_size = 5e-3;
  return c;
}

marl::LearnerConfig default_learner_config() {
  marl::LearnerConfig c;
  c.reward_scale = 0.1;
  c.agent_hidden = 32;
  return c;
}

ExperimentConfig ExperimentConfig::with_variant_applied() const {
  ExperimentConfig c = *this;
  switch (run.variant) {
    case Variant::kLagma:
    case Variant::kQmixBaseline: break;
    case Variant::kNoCl: c.vq.coverage = vq::CoverageMode::kNone; break;
    case Variant::kClAll: c.vq.coverage = vq::CoverageMode::kCvrAll; break;
    case Variant::kCq0: c.intrinsic.mode = intrinsic::IntrinsicMode::kCq0; break;
    case Variant::kCqtNoUpd: c.intrinsic.mode = intrinsic::IntrinsicMode::kCqtNoUpd; break;
  }
  return c;
}

void ExperimentConfig::validate() const {
  env.validate();
  recommended("n_c", vq.n_codes, std::size_t{64}, std::size_t{512});
  recommended("n_freq_vq", cadence.n_freq_vq, std::uint64_t{10}, std::uint64_t{40});
  recommended("n_freq_cd", cadence.n_freq_cd, std::uint64_t{10}, std::uint64_t{40});
  recommended("k", seq_k, std::size_t{10}, std::size_t{30});
  recommended("lambda_cvr", vq.lambda_cvr, 0.25, 1.0);
  vq.validate();
  require(vq.optimizer.step_size > 0.0, "vq learning_rate must be positive");
  require(code_buffer >= 1, "m must be >= 1");
  intrinsic.validate();
  learner.validate();
  require(learner.optimizer.step_size > 0.0, "learner learning_rate must be positive");
  require(learner.epsilon_end >= 0.0 && learner.epsilon_end <= learner.epsilon_start &&
              learner.epsilon_start <= 1.0,
          "epsilon must satisfy 0 <= epsilon_end <= epsilon_start <= 1");
  require(run.total_env_steps >= 1, "total_env_steps must be >= 1");
  require(run.eval_interval >= 1, "eval_interval must be >= 1");
  require(run.eval_episodes >= 1, "eval_episodes must be >= 1");
}

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config: " + origin + ": " + e.message() + " at line " + std::to_string(e.line()));
  }
  ExperimentConfig c;
  auto apply = [&](const std::string& section, const std::string& name, const std::string& value) {
    const Key* k = find_key(section, name);
    if (k == nullptr) {
      throw ConfigError("config: " + origin + ": unknown key '" +
                        (section.empty() ? name : section + "." + name) + "'");
    }
    k->set(c, value);
  };
  for (const auto& [name, node] : tree) {
    if (node.empty()) {
      apply("", name, node.data());
      continue;
    }
    static const char* sections[] = {"env", "vq", "intrinsic", "learner", "run"};
    if (std::find(std::begin(sections), std::end(sections), name) == std::end(sections)) {
      throw ConfigError("config: " + origin + ": unknown section [" + name + "]");
    }
    for (const auto& [key, leaf] : node) apply(name, key, leaf.data());
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

std::string format_config(const ExperimentConfig& config) {
  std::string out;
  std::string section;
  for (const Key& k : keys()) {
    if (k.section != section) {
      if (!section.empty()) out += "\n";
      section = k.section;
      out += "[" + section + "]\n";
    }
    out += k.name + " = " + k.get(config) + "\n";
  }
  return out;
}

std::vector<std::string> config_key_names() {
  std::vector<std::string> out;
  for (const Key& k : keys()) out.push_back(k.section + "." + k.name);
  return out;
}

}  // namespace lagma::harness
