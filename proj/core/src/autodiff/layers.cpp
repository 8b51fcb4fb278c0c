#include "lagma/autodiff/layers.hpp"

#include "lagma/common/error.hpp"

namespace lagma::ad {

Var activate(Var x, Activation act) {
  switch (act) {
    case Activation::kNone: return x;
    case Activation::kRelu: return relu(x);
    case Activation::kElu: return elu(x);
    case Activation::kTanh: return tanh(x);
  }
  return x;
}

Linear Linear::create(ParamSet& params, const std::string& prefix, std::size_t in,
                      std::size_t out, std::mt19937_64& rng) {
  Linear l;
  l.in = in;
  l.out = out;
  l.weight = params.add_weight(prefix + ".w", in, out, rng);
  l.bias = params.add_bias(prefix + ".b", out);
  return l;
}

void Linear::throw_input_mismatch(Var x) const {
  throw ShapeError("Linear: input " + x.value().shape_string() + " for " + std::to_string(in) +
                   " features");
}

Mlp Mlp::create(ParamSet& params, const std::string& prefix, std::size_t in,
                const std::vector<std::size_t>& hidden, std::size_t out,
                Activation hidden_activation, std::mt19937_64& rng) {
  Mlp m;
  m.hidden_activation = hidden_activation;
  std::size_t width = in;
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    m.layers.push_back(Linear::create(params, prefix + "." + std::to_string(i), width, hidden[i], rng));
    width = hidden[i];
  }
  m.layers.push_back(
      Linear::create(params, prefix + "." + std::to_string(hidden.size()), width, out, rng));
  return m;
}

}  // namespace lagma::ad
