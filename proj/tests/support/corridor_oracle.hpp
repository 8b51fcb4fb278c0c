#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <vector>

#include "lagma/codebook/code_value_table.hpp"
#include "lagma/codebook/sequence_buffer.hpp"
#include "lagma/envs/corridor.hpp"
#include "lagma/intrinsic/intrinsic.hpp"

namespace lagma::testing {

struct UnbiasedReport {
  std::size_t checked = 0;
  double max_error = 0.0;
};

/// Exact values of the Corridor by exhaustive recursion over (positions, t).
struct CorridorOracle {
  const envs::CorridorEnv& env;
  double gamma;
  std::map<std::size_t, double> value;

  std::size_t code(const envs::EnvState& s) const {
    const std::size_t L = env.spec().corridor_length;
    std::size_t idx = 0;
    std::size_t scale = 1;
    for (const auto& a : s.agents) {
      idx += static_cast<std::size_t>(a.x) * scale;
      scale *= L;
    }
    return idx + scale * s.timestep;
  }

  std::vector<std::vector<int>> joint_actions() const {
    std::vector<std::vector<int>> out = {{}};
    for (std::size_t i = 0; i < env.n_agents(); ++i) {
      std::vector<std::vector<int>> next;
      for (const auto& p : out) {
        for (int a = 0; a < 3; ++a) {
          auto q = p;
          q.push_back(a);
          next.push_back(q);
        }
      }
      out = next;
    }
    return out;
  }

  double v(const envs::EnvState& s) {
    if (s.terminated) return 0.0;
    const std::size_t c = code(s);
    if (auto it = value.find(c); it != value.end()) return it->second;
    double best = -1e300;
    for (const auto& a : joint_actions()) {
      envs::EnvState n = s;
      const double r = env.step(n, a).reward;
      best = std::max(best, r + gamma * v(n));
    }
    value[c] = best;
    return best;
  }

  std::vector<int> greedy(const envs::EnvState& s) {
    std::vector<int> best_a;
    double best = -1e300;
    for (const auto& a : joint_actions()) {
      envs::EnvState n = s;
      const double r = env.step(n, a).reward;
      const double q = r + gamma * v(n);
      if (q > best + 1e-12) {
        best = q;
        best_a = a;
      }
    }
    return best_a;
  }

  /// Codes of the non-final states of the greedy rollout from s.
  std::vector<std::size_t> optimal_codes(envs::EnvState s) {
    std::vector<std::size_t> out;
    while (!s.terminated) {
      out.push_back(code(s));
      env.step(s, greedy(s));
    }
    return out;
  }

  void enumerate(const envs::EnvState& s, const std::function<void(const envs::EnvState&)>& f,
                 std::map<std::size_t, bool>& seen) {
    if (s.terminated || seen[code(s)]) return;
    seen[code(s)] = true;
    f(s);
    for (const auto& a : joint_actions()) {
      envs::EnvState n = s;
      env.step(n, a);
      enumerate(n, f, seen);
    }
  }
};

/// Fills D_seq with one optimal reference per reachable state and D_VQ with
/// the exact value of every state, then compares y + r^I with r + gamma V* on
/// every on-reference code change of noisy greedy rollouts.
inline UnbiasedReport check_unbiased(const envs::EnvSpec& spec, double gamma, std::uint64_t seed,
                                     int episodes = 40) {
  envs::CorridorEnv env(spec);
  CorridorOracle oracle{env, gamma, {}};
  const std::size_t n_codes = env.joint_state_count();
  codebook::SequenceBuffer buffer(n_codes, 1);
  codebook::CodeValueTable values(n_codes, 100);
  std::map<std::size_t, bool> seen;
  oracle.enumerate(env.reset(0), [&](const envs::EnvState& s) {
    buffer.update(oracle.v(s), oracle.optimal_codes(s));
    values.update(oracle.code(s), oracle.v(s));
  }, seen);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> q_noise(-50.0, 300.0);
  std::bernoulli_distribution explore(0.2);
  std::uniform_int_distribution<int> any_action(0, 2);
  const intrinsic::IntrinsicConfig cfg{3, gamma, false, intrinsic::IntrinsicMode::kCqt};
  UnbiasedReport report;
  for (int ep = 0; ep < episodes; ++ep) {
    envs::EnvState s = env.reset(0);
    std::vector<std::size_t> codes;
    std::vector<double> max_q;
    std::vector<double> returns;
    std::vector<double> rewards;
    std::vector<double> next_v;
    while (!s.terminated) {
      codes.push_back(oracle.code(s));
      max_q.push_back(q_noise(rng));
      auto a = oracle.greedy(s);
      for (auto& ai : a) if (explore(rng)) ai = any_action(rng);
      rewards.push_back(env.step(s, a).reward);
      next_v.push_back(oracle.v(s));
    }
    returns.assign(rewards.size(), 0.0);
    double acc = 0.0;
    for (std::size_t t = rewards.size(); t-- > 0;) returns[t] = acc = rewards[t] + gamma * acc;
    const intrinsic::EpisodeCodes view{codes, returns, max_q, 0.0};
    const auto tr = intrinsic::generate_intrinsic(view, buffer, values, cfg, rng);
    for (std::size_t t = 1; t < codes.size(); ++t) {
      if (!tr.on_reference[t] || !tr.code_changed[t]) continue;
      const double y = rewards[t - 1] + gamma * max_q[t];
      const double expect = intrinsic::proposition1_target(rewards[t - 1], next_v[t - 1], gamma);
      report.max_error = std::max(report.max_error, std::abs(y + tr.reward[t - 1] - expect));
      ++report.checked;
    }
  }
  return report;
}

}  // namespace lagma::testing
