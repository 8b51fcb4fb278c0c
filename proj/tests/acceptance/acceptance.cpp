// Acceptance runner: prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lagma/autodiff/gradcheck.hpp"
#include "lagma/codebook/code_value_table.hpp"
#include "lagma/codebook/sequence_buffer.hpp"
#include "lagma/common/runtime.hpp"
#include "lagma/envs/capture.hpp"
#include "lagma/harness/config.hpp"
#include "lagma/harness/run.hpp"
#include "lagma/intrinsic/intrinsic.hpp"
#include "lagma/marl/agent_net.hpp"
#include "lagma/marl/mixer.hpp"
#include "lagma/vq/indexing.hpp"
#include "lagma/vq/vq_model.hpp"
#include "support/corridor_oracle.hpp"

using namespace lagma;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string strf(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

ad::Tensor random_tensor(std::size_t r, std::size_t c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  ad::Tensor t(r, c);
  for (auto& v : t.data()) v = g(rng);
  return t;
}

// ---------------------------------------------------------------------------
// Synthetic state streams shared by the gradient and coverage checks.

/// Gridworld-like episodes: a point walks from a random start in the unit
/// square toward a fixed goal. Rows are [x, y, active flag, goal x, goal y,
/// progress], so every state sits in the positive orthant like Capture states.
std::vector<std::vector<double>> synthetic_stream(std::size_t episodes, std::size_t length,
                                                  std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> start(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 0.02);
  std::vector<std::vector<double>> out;
  for (std::size_t e = 0; e < episodes; ++e) {
    const double x0 = start(rng);
    const double y0 = start(rng);
    std::vector<double> states;
    for (std::size_t t = 0; t < length; ++t) {
      const double a = static_cast<double>(t) / static_cast<double>(length - 1);
      const double x = (1.0 - a) * x0 + a * 0.8 + noise(rng);
      const double y = (1.0 - a) * y0 + a * 0.8 + noise(rng);
      states.insert(states.end(), {x, y, 1.0, 0.8, 0.8, a});
    }
    out.push_back(std::move(states));
  }
  return out;
}

constexpr std::size_t kStreamDim = 6;

// ---------------------------------------------------------------------------

Outcome gradients() {
  std::vector<std::string> parts;
  double worst = 0.0;
  std::size_t min_probes = ~std::size_t{0};
  auto record = [&](const std::string& what, const ad::GradCheckReport& r) {
    worst = std::max(worst, r.max_rel_error);
    min_probes = std::min(min_probes, r.probes);
    parts.push_back(what + strf(" %.1e", r.max_rel_error));
  };

  {
    vq::VqModel model(kStreamDim, {}, 3);
    const auto stream = synthetic_stream(4, 12, 5);
    std::vector<vq::StateSequence> batch;
    std::vector<double> flat;
    for (const auto& s : stream) {
      batch.push_back({s, {}});
      flat.insert(flat.end(), s.begin(), s.end());
    }
    const std::size_t rows = flat.size() / kStreamDim;
    // The full loss reaches the encoder only through the straight-through
    // estimator, which finite differences cannot see, so the encoder is
    // checked on a random projection of its output.
    std::mt19937_64 rng(5);
    const ad::Tensor proj = random_tensor(rows, model.latent_dim(), rng);
    const ad::Tensor x(rows, kStreamDim, flat);
    const ad::ScalarFn encoder = [&](ad::Tape& tape, ad::ParamSet& p) {
      return ad::weighted_sum(model.encoder().forward(tape, p, tape.constant(x)), proj);
    };
    const ad::ScalarFn full = [&](ad::Tape& tape, ad::ParamSet&) {
      return model.build_loss(tape, batch, vq::CoverageMode::kCvr);
    };
    std::mt19937_64 probe(7);
    record("encoder", ad::grad_check(encoder, model.params(), 128, probe, 1e-5, "encoder"));
    record("decoder", ad::grad_check(full, model.params(), 128, probe, 1e-5, "decoder"));
  }
  {
    const envs::CaptureEnv env(envs::EnvSpec{});
    ad::ParamSet params;
    std::mt19937_64 rng(11);
    const marl::AgentNet net =
        marl::AgentNet::create(params, "agent", {env.obs_dim(), env.n_actions(), env.n_agents(), 64}, rng);
    const std::size_t steps = 3;
    const std::size_t rows = env.n_agents() * 2;
    const ad::Tensor inputs = random_tensor(steps * rows, net.input_dim(), rng);
    const ad::Tensor weights = random_tensor(steps * rows, env.n_actions(), rng);
    const ad::ScalarFn fn = [&](ad::Tape& tape, ad::ParamSet& p) {
      return ad::weighted_sum(net.unroll(tape, p, tape.constant(inputs), steps, rows), weights);
    };
    std::mt19937_64 probe(13);
    record("agent", ad::grad_check(fn, params, 128, probe));
  }
  {
    const envs::CaptureEnv env(envs::EnvSpec{});
    ad::ParamSet params;
    std::mt19937_64 rng(17);
    const marl::Mixer mixer = marl::Mixer::create(
        params, "mixer", {marl::MixerKind::kQmix, env.n_agents(), env.state_dim(), 32, 64}, rng);
    const ad::Tensor s = random_tensor(8, env.state_dim(), rng);
    const ad::Tensor q = random_tensor(8, env.n_agents(), rng);
    const ad::Tensor w = random_tensor(8, 1, rng);
    const ad::ScalarFn fn = [&](ad::Tape& tape, ad::ParamSet& p) {
      return ad::weighted_sum(mixer.forward(tape, p, tape.constant(q), tape.constant(s)), w);
    };
    std::mt19937_64 probe(19);
    record("mixer", ad::grad_check(fn, params, 128, probe));
  }

  std::string detail = "max rel error";
  for (const auto& p : parts) detail += " " + p;
  detail += strf(", %zu+ probes each", min_probes);
  return {worst < 1e-4 && min_probes >= 64, detail};
}

Outcome timestep_sets() {
  auto as_set = [](const vq::IndexSet& s) { return std::vector<std::size_t>(s.begin(), s.end()); };
  std::vector<std::size_t> j0 = {0, 1, 2, 3, 4, 5, 60};
  std::vector<std::size_t> j5 = {30, 31, 32, 33, 34, 35};
  bool ok = as_set(vq::timestep_indices(0, 10, 64)) == j0 && as_set(vq::timestep_indices(5, 10, 64)) == j5 &&
            as_set(vq::timestep_indices(7, 20, 8)) == std::vector<std::size_t>{2};
  const bool examples = ok;

  std::mt19937_64 rng(23);
  std::uniform_int_distribution<std::size_t> pick_t(1, 200);
  std::size_t failures = 0;
  for (int i = 0; i < 50; ++i) {
    const std::size_t T = pick_t(rng);
    std::uniform_int_distribution<std::size_t> pick_n(T, 4 * T + 7);
    const std::size_t n = pick_n(rng);
    std::vector<int> seen(n, 0);
    bool good = true;
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t j : vq::timestep_indices(t, T, n)) {
        if (j >= n) good = false;
        else ++seen[j];
      }
    }
    for (int c : seen) good = good && c == 1;
    if (!good) ++failures;
  }
  ok = ok && failures == 0;
  return {ok, strf("worked examples %s, partition failures %zu/50", examples ? "match" : "differ", failures)};
}

Outcome update_streams() {
  std::mt19937_64 rng(29);
  std::size_t discrepancies = 0;
  std::size_t updates = 0;
  for (int stream = 0; stream < 10000; ++stream) {
    const std::size_t n_codes = std::uniform_int_distribution<std::size_t>(1, 6)(rng);
    const std::size_t m = std::uniform_int_distribution<std::size_t>(1, 8)(rng);
    const std::size_t k = std::uniform_int_distribution<std::size_t>(1, 6)(rng);
    const std::size_t length = std::uniform_int_distribution<std::size_t>(0, 40)(rng);
    std::uniform_int_distribution<std::size_t> code(0, n_codes - 1);
    // Coarse keys so ties against the current minimum occur often.
    std::uniform_int_distribution<int> coarse(-20, 20);
    std::uniform_real_distribution<double> fine(-100.0, 100.0);
    std::bernoulli_distribution use_coarse(0.5);

    codebook::CodeValueTable table(n_codes, m);
    codebook::SequenceBuffer buffer(n_codes, k);
    std::vector<std::vector<double>> history(n_codes);
    std::vector<std::vector<double>> sorted_keys(n_codes);  // descending
    std::vector<std::multiset<std::pair<double, std::size_t>>> offered(n_codes);

    for (std::size_t u = 0; u < length; ++u, ++updates) {
      const std::size_t c = code(rng);
      const double r = use_coarse(rng) ? coarse(rng) : fine(rng);

      history[c].push_back(r);
      table.update(c, r);
      const std::size_t from = history[c].size() > m ? history[c].size() - m : 0;
      double total = 0.0;
      for (std::size_t i = from; i < history[c].size(); ++i) total += history[c][i];
      const double mean = total / static_cast<double>(history[c].size() - from);
      if (table.value(c) != mean) ++discrepancies;

      const codebook::QuantizedTrajectory traj = {c, code(rng)};
      auto& keys = sorted_keys[c];
      const bool accept = keys.size() < k || r > keys.back();
      if (accept) {
        if (keys.size() == k) keys.pop_back();
        keys.insert(std::upper_bound(keys.begin(), keys.end(), r, std::greater<>()), r);
      }
      offered[c].insert({r, traj[1]});
      if (buffer.update(r, traj) != accept) ++discrepancies;

      const auto& heap = buffer.heap(c);
      std::vector<double> stored;
      for (const auto& e : heap) {
        stored.push_back(e.key);
        if (e.trajectory.size() != 2 || e.trajectory[0] != c || !offered[c].contains({e.key, e.trajectory[1]})) {
          ++discrepancies;
        }
      }
      std::sort(stored.begin(), stored.end(), std::greater<>());
      if (stored != keys || !std::is_heap(heap.begin(), heap.end(), codebook::SequenceBuffer::heap_less)) {
        ++discrepancies;
      }
    }
  }
  return {discrepancies == 0, strf("10000 streams, %zu updates, %zu discrepancies", updates, discrepancies)};
}

Outcome corridor_oracle() {
  struct Case {
    std::size_t agents, length, limit;
    double gamma;
  };
  const std::vector<Case> cases = {{1, 4, 12, 0.9}, {1, 6, 15, 0.99}, {2, 5, 10, 0.95}, {2, 6, 12, 0.99}, {3, 4, 8, 0.9}};
  std::size_t checked = 0;
  double worst = 0.0;
  std::uint64_t seed = 31;
  for (const auto& c : cases) {
    envs::EnvSpec spec;
    spec.kind = envs::EnvKind::kCorridor;
    spec.n_agents = c.agents;
    spec.corridor_length = c.length;
    spec.episode_limit = c.limit;
    const auto report = lagma::testing::check_unbiased(spec, c.gamma, seed++, 60);
    checked += report.checked;
    worst = std::max(worst, report.max_error);
  }
  return {checked > 0 && worst < 1e-9,
          strf("%zu on-reference code changes, max |y + r^I - (r + gamma V*)| = %.1e", checked, worst)};
}

Outcome intrinsic_contract() {
  std::mt19937_64 rng(37);
  std::size_t violations = 0;
  std::size_t emitted = 0;
  std::size_t nonzero = 0;
  const intrinsic::IntrinsicMode modes[] = {intrinsic::IntrinsicMode::kCqt, intrinsic::IntrinsicMode::kCq0,
                                            intrinsic::IntrinsicMode::kCqtNoUpd};
  for (int ep = 0; ep < 1000; ++ep) {
    const std::size_t n_codes = std::uniform_int_distribution<std::size_t>(2, 12)(rng);
    const std::size_t L = std::uniform_int_distribution<std::size_t>(1, 60)(rng);
    std::uniform_int_distribution<std::size_t> code(0, n_codes - 1);
    std::uniform_real_distribution<double> value(-50.0, 250.0);
    std::bernoulli_distribution stay(0.4);

    codebook::SequenceBuffer buffer(n_codes, 3);
    codebook::CodeValueTable values(n_codes, 10);
    for (std::size_t c = 0; c < n_codes; ++c) {
      if (std::bernoulli_distribution(0.8)(rng)) values.update(c, value(rng));
      for (int i = 0; i < 2; ++i) {
        codebook::QuantizedTrajectory traj = {c};
        for (int j = 0; j < 6; ++j) traj.push_back(code(rng));
        buffer.update(value(rng), traj);
      }
    }
    std::vector<std::size_t> codes;
    std::vector<double> returns;
    std::vector<double> max_q;
    for (std::size_t t = 0; t < L; ++t) {
      codes.push_back(t > 0 && stay(rng) ? codes.back() : code(rng));
      returns.push_back(value(rng));
      max_q.push_back(value(rng));
    }
    const intrinsic::IntrinsicConfig cfg{std::uniform_int_distribution<std::size_t>(1, 7)(rng), 0.99, true,
                                         modes[ep % 3]};
    const intrinsic::EpisodeCodes view{codes, returns, max_q, value(rng)};
    const auto tr = intrinsic::generate_intrinsic(view, buffer, values, cfg, rng);
    for (std::size_t t = 0; t < tr.reward.size(); ++t) {
      ++emitted;
      const double r = tr.reward[t];
      if (!(r >= 0.0)) ++violations;
      if (r != 0.0) {
        ++nonzero;
        if (t + 1 >= codes.size() || !tr.on_reference[t + 1] || !tr.code_changed[t + 1] ||
            codes[t + 1] == codes[t]) {
          ++violations;
        }
      }
    }
  }
  return {violations == 0 && nonzero > 0,
          strf("%zu rewards (%zu nonzero), %zu violations", emitted, nonzero, violations)};
}

struct CoverageResult {
  std::size_t distinct = 0;
  double spread = 0.0;
};

CoverageResult train_coverage(vq::CoverageMode mode) {
  const std::size_t episodes = 20;
  const std::size_t length = 50;
  const auto stream = synthetic_stream(episodes, length, 41);
  vq::VqConfig cfg;
  cfg.coverage = mode;
  vq::VqModel model(kStreamDim, cfg, 43);
  const std::size_t per_batch = 4;
  for (std::size_t step = 0; step < 2000; ++step) {
    std::vector<vq::StateSequence> batch;
    for (std::size_t i = 0; i < per_batch; ++i) batch.push_back({stream[(step * per_batch + i) % episodes], {}});
    model.fit_batch(batch);
  }
  std::set<std::size_t> used;
  for (const auto& s : stream) {
    for (std::size_t z : model.quantize_states(s)) used.insert(z);
  }
  const ad::Tensor& codes = model.codebook();
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < codes.rows(); ++i) {
    for (std::size_t j = i + 1; j < codes.rows(); ++j, ++pairs) {
      double d = 0.0;
      for (std::size_t c = 0; c < codes.cols(); ++c) d += (codes(i, c) - codes(j, c)) * (codes(i, c) - codes(j, c));
      total += std::sqrt(d);
    }
  }
  return {used.size(), total / static_cast<double>(pairs)};
}

Outcome coverage_effect() {
  const CoverageResult cvr = train_coverage(vq::CoverageMode::kCvr);
  const CoverageResult none = train_coverage(vq::CoverageMode::kNone);
  const CoverageResult all = train_coverage(vq::CoverageMode::kCvrAll);
  return {cvr.distinct >= 2 * none.distinct && cvr.spread >= all.spread,
          strf("distinct codes cvr %zu vs none %zu; mean pairwise distance cvr %.4f vs cvr_all %.4f", cvr.distinct,
              none.distinct, cvr.spread, all.spread)};
}

struct AblationSummary {
  std::map<harness::Variant, double> median;
  double baseline_seconds = 0.0;
  bool ok = false;
  std::string error;
};

AblationSummary ablation(const std::string& runs_dir, const std::string& config_path, std::size_t seeds) {
  AblationSummary out;
  try {
    const harness::ExperimentConfig base =
        config_path.empty() ? harness::ExperimentConfig{} : harness::load_config(config_path);
    std::vector<std::uint64_t> seed_list;
    for (std::size_t s = 1; s <= seeds; ++s) seed_list.push_back(s);
    const auto& variants = harness::all_variants();
    const auto runs = harness::run_ablation(base, variants, seed_list, runs_dir);
    std::map<harness::Variant, std::vector<double>> wins;
    for (const auto& r : runs) {
      wins[r.variant].push_back(r.final_record.win_rate);
      if (r.variant == harness::Variant::kLagma || r.variant == harness::Variant::kQmixBaseline) {
        out.baseline_seconds += r.seconds;
      }
    }
    for (const auto& [v, w] : wins) out.median[v] = harness::median(w);
    out.ok = true;
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

Outcome end_to_end(const AblationSummary& a) {
  if (!a.ok) return {false, "ablation runs failed: " + a.error};
  const double lagma = a.median.at(harness::Variant::kLagma);
  const double qmix = a.median.at(harness::Variant::kQmixBaseline);
  return {lagma >= 0.9 && qmix <= 0.5 && a.baseline_seconds < 3600.0,
          strf("median win rate lagma %.3f (need >= 0.9), qmix_baseline %.3f (need <= 0.5), training time %.0f s",
              lagma, qmix, a.baseline_seconds)};
}

Outcome ablation_order(const AblationSummary& a) {
  if (!a.ok) return {false, "ablation runs failed: " + a.error};
  const double lagma = a.median.at(harness::Variant::kLagma);
  bool ok = true;
  std::string detail = strf("lagma %.3f", lagma);
  for (auto v : {harness::Variant::kNoCl, harness::Variant::kClAll, harness::Variant::kCq0,
                 harness::Variant::kCqtNoUpd}) {
    const double m = a.median.at(v);
    ok = ok && lagma >= m;
    detail += strf(", %s %.3f", harness::to_string(v).c_str(), m);
  }
  return {ok, detail};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Outcome determinism(const std::string& scratch) {
  harness::ExperimentConfig cfg;
  cfg.run.total_env_steps = 3000;
  cfg.run.eval_interval = 1000;
  cfg.run.eval_episodes = 8;
  cfg.run.seed = 5;
  const fs::path root = fs::path(scratch) / "determinism";
  fs::remove_all(root);
  harness::run_training(cfg, (root / "a").string());
  harness::run_training(cfg, (root / "b").string());
  harness::RunOptions partial;
  partial.max_records = 2;
  harness::run_training(cfg, (root / "c").string(), partial);
  harness::RunOptions resume;
  resume.resume = true;
  harness::run_training(cfg, (root / "c").string(), resume);

  const std::string a = slurp(root / "a" / harness::kMetricsFile);
  const std::string b = slurp(root / "b" / harness::kMetricsFile);
  const std::string c = slurp(root / "c" / harness::kMetricsFile);
  const auto lines = std::count(a.begin(), a.end(), '\n');
  return {!a.empty() && a == b && a == c,
          strf("%ld records; same seed %s, resumed run %s", static_cast<long>(lines), a == b ? "identical" : "differs",
              a == c ? "byte-identical" : "differs")};
}

Outcome mixer_monotonicity() {
  std::mt19937_64 rng(47);
  std::uniform_int_distribution<std::size_t> agents(1, 6);
  std::uniform_int_distribution<std::size_t> state_dim(1, 16);
  std::uniform_real_distribution<double> scale(0.1, 5.0);
  const double h = 1e-4;
  double worst = 1e300;
  std::size_t violations = 0;
  for (int draw = 0; draw < 10000; ++draw) {
    const std::size_t n = agents(rng);
    const std::size_t sd = state_dim(rng);
    ad::ParamSet params;
    const marl::Mixer mixer = marl::Mixer::create(params, "mixer", {marl::MixerKind::kQmix, n, sd, 8, 16}, rng);
    const double pscale = scale(rng);
    for (std::size_t i = 0; i < params.size(); ++i) {
      for (auto& v : params.value(i).data()) v *= pscale;
    }
    const ad::Tensor s = random_tensor(1, sd, rng, scale(rng));
    const ad::Tensor q = random_tensor(1, n, rng, scale(rng));
    auto eval = [&](const ad::Tensor& qv) {
      ad::Tape tape(ad::Tape::Mode::kInference);
      return mixer.forward(tape, std::as_const(params), tape.constant(qv), tape.constant(s)).value().item();
    };
    for (std::size_t i = 0; i < n; ++i) {
      ad::Tensor up = q;
      ad::Tensor down = q;
      up[i] += h;
      down[i] -= h;
      const double fd = (eval(up) - eval(down)) / (2.0 * h);
      worst = std::min(worst, fd);
      if (fd < -1e-12) ++violations;
    }
  }
  return {violations == 0, strf("10000 draws, min dQ_tot/dq_i %.3e, %zu violations", worst, violations)};
}

}  // namespace

int main(int argc, char** argv) {
  configure_allocator();
  spdlog::set_level(spdlog::level::warn);
  if (const char* lvl = std::getenv("LAGMA_LOG")) spdlog::set_level(spdlog::level::from_str(lvl));

  CLI::App app{"LAGMA acceptance checks"};
  std::string runs_dir = "acceptance-runs";
  std::string config_path;
  std::size_t seeds = 5;
  std::vector<int> only;
  app.add_option("--runs-dir", runs_dir, "Directory holding (or receiving) the ablation training runs");
  app.add_option("--config", config_path, "Base config for the training runs (default: built-in defaults)");
  app.add_option("--seeds", seeds, "Seeds per variant for the training runs")->check(CLI::Range(1, 100));
  app.add_option("--only", only, "Run only these criteria")->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);

  auto wanted = [&](int c) { return only.empty() || std::find(only.begin(), only.end(), c) != only.end(); };
  struct Check {
    int id;
    const char* name;
    double limit_seconds;  // 0 = no runtime bound
    std::function<Outcome()> run;
  };
  AblationSummary summary;
  bool ablation_done = false;
  auto ensure_ablation = [&]() -> const AblationSummary& {
    if (!ablation_done) {
      summary = ablation(runs_dir, config_path, seeds);
      ablation_done = true;
    }
    return summary;
  };
  const std::vector<Check> checks = {
      {1, "gradient correctness", 30.0, gradients},
      {2, "timestep code sets", 1.0, timestep_sets},
      {3, "heap and FIFO oracles", 10.0, update_streams},
      {4, "corridor target oracle", 10.0, corridor_oracle},
      {5, "intrinsic reward contract", 0.0, intrinsic_contract},
      {6, "coverage loss effect", 120.0, coverage_effect},
      {7, "end-to-end learning", 0.0, [&] { return end_to_end(ensure_ablation()); }},
      {8, "ablation ordering", 0.0, [&] { return ablation_order(ensure_ablation()); }},
      {9, "determinism and resume", 0.0, [&] { return determinism(runs_dir); }},
      {10, "mixer monotonicity", 0.0, mixer_monotonicity},
  };

  int failed = 0;
  for (const auto& c : checks) {
    if (!wanted(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.limit_seconds > 0.0 && secs >= c.limit_seconds) {
      o.pass = false;
      o.detail += strf("; over the %.0f s limit", c.limit_seconds);
    }
    std::printf("criterion %2d %-26s %s  %s (%.2f s)\n", c.id, c.name, o.pass ? "PASS" : "FAIL", o.detail.c_str(),
                secs);
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
