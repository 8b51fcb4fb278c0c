#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "lagma/autodiff/ops.hpp"

namespace lagma::ad {

enum class Activation { kNone, kRelu, kElu, kTanh };

Var activate(Var x, Activation act);

/// Affine map x W + b; x is [rows, in].
struct Linear {
  std::size_t weight = 0;
  std::size_t bias = 0;
  std::size_t in = 0;
  std::size_t out = 0;

  static Linear create(ParamSet& params, const std::string& prefix, std::size_t in,
                       std::size_t out, std::mt19937_64& rng);
  [[noreturn]] void throw_input_mismatch(Var x) const;
  Var forward(Tape& tape, ParamSet& params, Var x) const { return apply(tape, params, x); }
  Var forward(Tape& tape, const ParamSet& params, Var x) const { return apply(tape, params, x); }

 private:
  template <typename Params>
  Var apply(Tape& tape, Params& params, Var x) const;
};

/// Stack of Linear layers with a shared hidden activation; the last layer is
/// linear.
struct Mlp {
  std::vector<Linear> layers;
  Activation hidden_activation = Activation::kRelu;

  static Mlp create(ParamSet& params, const std::string& prefix, std::size_t in,
                    const std::vector<std::size_t>& hidden, std::size_t out,
                    Activation hidden_activation, std::mt19937_64& rng);
  Var forward(Tape& tape, ParamSet& params, Var x) const { return apply(tape, params, x); }
  Var forward(Tape& tape, const ParamSet& params, Var x) const { return apply(tape, params, x); }
  std::size_t in() const { return layers.front().in; }
  std::size_t out() const { return layers.back().out; }

 private:
  template <typename Params>
  Var apply(Tape& tape, Params& params, Var x) const {
    for (std::size_t i = 0; i < layers.size(); ++i) {
      x = layers[i].forward(tape, params, x);
      if (i + 1 < layers.size()) x = activate(x, hidden_activation);
    }
    return x;
  }
};

template <typename Params>
Var Linear::apply(Tape& tape, Params& params, Var x) const {
  if (x.cols() != in) throw_input_mismatch(x);
  return add_bias(matmul(x, tape.param(params, weight)), tape.param(params, bias));
}

}  // namespace lagma::ad
