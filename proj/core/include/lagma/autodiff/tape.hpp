#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

#include "lagma/autodiff/params.hpp"
#include "lagma/autodiff/tensor.hpp"

namespace lagma::ad {

class Tape;

/// Handle to a value recorded on a Tape.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  Tape* tape() const { return tape_; }
  std::uint32_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::uint32_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::uint32_t id_ = 0;
};

/// Records primitive operations in execution order and replays their local
/// backward rules in reverse.
///
/// Nodes are appended only, so the record order is a topological order.
/// A tape built in inference mode keeps values only and cannot run backward.
class Tape {
 public:
  enum class Mode { kTrain, kInference };

  using BackwardFn = std::function<void(Tape&, const Tensor& grad_out)>;

  explicit Tape(Mode mode = Mode::kTrain) : mode_(mode) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  /// Leaf whose gradient is added to params.grad(index) by backward().
  Var param(ParamSet& params, std::size_t index);
  /// Non-trainable leaf over a parameter, for read-only evaluation.
  Var param(const ParamSet& params, std::size_t index) { return constant_ref(params.value(index)); }
  /// Read-only leaf; the tensor is referenced, not copied.
  Var constant_ref(const Tensor& value);

  /// Gradients of a scalar loss into every reachable parameter leaf.
  void backward(Var loss);

  const Tensor& value(Var v) const;
  bool requires_grad(Var v) const { return nodes_[v.id()].requires_grad; }
  bool training() const { return mode_ == Mode::kTrain; }
  std::size_t node_count() const { return nodes_.size(); }

  // Used by primitive implementations.
  Var record(Tensor value, std::span<const Var> inputs, BackwardFn backward);
  Var record(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward) {
    return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                  std::move(backward));
  }
  /// Gradient accumulator of `v`, allocated on first use; nullptr when `v`
  /// does not require a gradient.
  Tensor* grad_slot(Var v);
  void accumulate(Var v, const Tensor& g);

 private:
  struct Node {
    Tensor value;
    const Tensor* external = nullptr;
    Tensor* param_grad = nullptr;
    bool requires_grad = false;
    bool has_grad = false;
    Tensor grad;
    BackwardFn backward;
  };

  Var push(Node node);
  void check_owned(Var v) const;

  Mode mode_;
  bool backward_done_ = false;
  std::vector<Node> nodes_;
};

inline const Tensor& Var::value() const { return tape_->value(*this); }

}  // namespace lagma::ad
