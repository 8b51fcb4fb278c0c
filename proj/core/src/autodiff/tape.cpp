#include "lagma/autodiff/tape.hpp"

#include "lagma/common/error.hpp"

namespace lagma::ad {

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

void Tape::check_owned(Var v) const {
  if (v.tape() != this || v.id() >= nodes_.size()) {
    throw Error("Tape: variable does not belong to this tape");
  }
}

Var Tape::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::constant_ref(const Tensor& value) {
  Node n;
  n.external = &value;
  return push(std::move(n));
}

Var Tape::param(ParamSet& params, std::size_t index) {
  Node n;
  n.external = &params.value(index);
  if (training()) {
    n.param_grad = &params.grad(index);
    n.requires_grad = true;
  }
  return push(std::move(n));
}

const Tensor& Tape::value(Var v) const {
  const Node& n = nodes_[v.id()];
  return n.external != nullptr ? *n.external : n.value;
}

Var Tape::record(Tensor value, std::span<const Var> inputs, BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  if (training()) {
    for (Var in : inputs) {
      check_owned(in);
      if (nodes_[in.id()].requires_grad) {
        n.requires_grad = true;
        break;
      }
    }
    if (n.requires_grad) n.backward = std::move(backward);
  }
  return push(std::move(n));
}

Tensor* Tape::grad_slot(Var v) {
  Node& n = nodes_[v.id()];
  if (!n.requires_grad) return nullptr;
  if (!n.has_grad) {
    const Tensor& val = n.external != nullptr ? *n.external : n.value;
    n.grad = Tensor(val.rows(), val.cols());
    n.has_grad = true;
  }
  return &n.grad;
}

void Tape::accumulate(Var v, const Tensor& g) {
  Tensor* slot = grad_slot(v);
  if (slot == nullptr) return;
  if (!slot->same_shape(g)) {
    throw ShapeError("Tape::accumulate: gradient " + g.shape_string() + " for value " +
                     slot->shape_string());
  }
  add_into(*slot, g);
}

void Tape::backward(Var loss) {
  if (!training()) throw Error("Tape::backward on an inference tape");
  check_owned(loss);
  if (backward_done_) throw Error("Tape::backward called twice on one tape");
  if (value(loss).size() != 1) {
    throw ShapeError("backward: loss must be scalar, got " + value(loss).shape_string());
  }
  backward_done_ = true;
  Tensor* seed = grad_slot(loss);
  if (seed == nullptr) return;
  (*seed)[0] = 1.0;

  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.has_grad) continue;
    if (n.param_grad != nullptr) {
      add_into(*n.param_grad, n.grad);
    } else if (n.backward) {
      n.backward(*this, n.grad);
    }
    n.grad = Tensor();
    n.has_grad = false;
  }
}

}  // namespace lagma::ad
