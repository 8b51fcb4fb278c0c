#include "lagma/autodiff/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "lagma/common/error.hpp"

namespace lagma::ad {

namespace {

double evaluate(const ScalarFn& fn, ParamSet& params) {
  Tape tape(Tape::Mode::kInference);
  return fn(tape, params).value().item();
}

}  // namespace

GradCheckReport grad_check(const ScalarFn& fn, ParamSet& params, std::size_t probe_count,
                           std::mt19937_64& rng, double step, std::string_view prefix) {
  const double base = evaluate(fn, params);
  if (evaluate(fn, params) != base) {
    throw Error("grad_check: function is not deterministic");
  }

  params.zero_grad();
  {
    Tape tape;
    Var loss = fn(tape, params);
    tape.backward(loss);
  }

  std::vector<std::size_t> selected;
  std::size_t total = 0;
  for (std::size_t p = 0; p < params.size(); ++p) {
    if (params.name(p).starts_with(prefix)) {
      selected.push_back(p);
      total += params.value(p).size();
    }
  }
  if (total == 0) return {};
  std::uniform_int_distribution<std::size_t> pick(0, total - 1);

  GradCheckReport report;
  for (std::size_t probe = 0; probe < probe_count; ++probe) {
    std::size_t flat = pick(rng);
    std::size_t k = 0;
    while (flat >= params.value(selected[k]).size()) {
      flat -= params.value(selected[k]).size();
      ++k;
    }
    const std::size_t p = selected[k];
    double& w = params.value(p)[flat];
    const double saved = w;
    w = saved + step;
    const double up = evaluate(fn, params);
    w = saved - step;
    const double down = evaluate(fn, params);
    w = saved;

    const double numeric = (up - down) / (2.0 * step);
    const double analytic = params.grad(p)[flat];
    const double err =
        std::abs(analytic - numeric) / std::max(1e-8, std::abs(analytic) + std::abs(numeric));
    report.max_rel_error = std::max(report.max_rel_error, err);
    ++report.probes;
  }
  return report;
}

}  // namespace lagma::ad
