#pragma once

#include <cstddef>
#include <functional>
#include <random>
#include <string_view>
#include <vector>

#include "lagma/autodiff/tape.hpp"

namespace lagma::ad {

/// Builds a scalar from `params` on the given tape. Must be deterministic.
using ScalarFn = std::function<Var(Tape&, ParamSet&)>;

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t probes = 0;
};

/// Compares backward() against central differences on `probe_count` random
/// parameter coordinates. The relative error of one probe is
/// |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
///
/// Only parameters whose name starts with `prefix` are probed; the default
/// empty prefix selects all of them.
///
/// Throws lagma::Error when two evaluations at the same point disagree.
GradCheckReport grad_check(const ScalarFn& fn, ParamSet& params, std::size_t probe_count,
                           std::mt19937_64& rng, double step = 1e-5, std::string_view prefix = {});

}  // namespace lagma::ad
