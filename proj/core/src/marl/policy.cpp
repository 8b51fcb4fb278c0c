#include "lagma/marl/policy.hpp"

#include <algorithm>
#include <limits>

#include "lagma/common/error.hpp"

namespace lagma::marl {

double epsilon_at(std::uint64_t step, std::uint64_t anneal_steps, double start, double end) {
  if (anneal_steps == 0 || step >= anneal_steps) return end;
  const double frac = static_cast<double>(step) / static_cast<double>(anneal_steps);
  return start + (end - start) * frac;
}

int greedy_action(std::span<const double> q, std::span<const std::uint8_t> avail) {
  int best = -1;
  double best_q = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < q.size(); ++a) {
    if (avail[a] == 0) continue;
    if (best < 0 || q[a] > best_q) {
      best = static_cast<int>(a);
      best_q = q[a];
    }
  }
  if (best < 0) throw Error("select_actions: no available action");
  return best;
}

std::vector<int> select_actions(const ad::Tensor& q, std::span<const std::uint8_t> avail,
                                double epsilon, std::mt19937_64& rng) {
  const std::size_t n = q.rows();
  const std::size_t A = q.cols();
  if (avail.size() != n * A) throw ShapeError("select_actions: availability mask has wrong size");
  std::vector<int> out(n);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    auto mask = avail.subspan(i * A, A);
    std::vector<int> allowed;
    for (std::size_t a = 0; a < A; ++a) {
      if (mask[a] != 0) allowed.push_back(static_cast<int>(a));
    }
    if (allowed.empty()) throw Error("select_actions: agent " + std::to_string(i) + " has no available action");
    const double u = coin(rng);
    std::uniform_int_distribution<std::size_t> pick(0, allowed.size() - 1);
    const int random_action = allowed[pick(rng)];
    out[i] = u < epsilon ? random_action : greedy_action(q.row_span(i), mask);
  }
  return out;
}

}  // namespace lagma::marl
