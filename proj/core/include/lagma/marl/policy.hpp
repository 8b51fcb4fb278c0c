#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "lagma/autodiff/tensor.hpp"

namespace lagma::marl {

/// Linear decay from `start` at step 0 to `end` at `anneal_steps`, then flat.
double epsilon_at(std::uint64_t step, std::uint64_t anneal_steps, double start = 1.0,
                  double end = 0.05);

/// Epsilon-greedy joint action. q is [n_agents, n_actions]; avail holds
/// n_agents * n_actions flags. Every agent consumes the same random draws
/// whatever epsilon is, so runs differing only in epsilon share one stream.
std::vector<int> select_actions(const ad::Tensor& q, std::span<const std::uint8_t> avail,
                                double epsilon, std::mt19937_64& rng);

/// Greedy available action of one row; ties go to the lowest index.
int greedy_action(std::span<const double> q, std::span<const std::uint8_t> avail);

}  // namespace lagma::marl
