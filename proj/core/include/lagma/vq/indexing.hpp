#pragma once

#include <cstddef>
#include <vector>

namespace lagma::vq {

/// Sorted, distinct code indices in [0, n_codes).
using IndexSet = std::vector<std::size_t>;

/// Codes whose coverage loss is active at timestep t of an episode whose
/// maximum batch time is T.
///
/// With d = n_codes / T and r = n_codes % T: when d >= 1 the block
/// {d*t, ..., d*(t+1) - 1} plus the leftover code d*T + t for t < r, so the
/// sets over t = 0..T-1 partition the codebook; otherwise the single code
/// floor(t * n_codes / T).
IndexSet timestep_indices(std::size_t t, std::size_t T, std::size_t n_codes);

}  // namespace lagma::vq
