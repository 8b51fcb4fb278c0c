#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "lagma/autodiff/tape.hpp"

namespace lagma::ad {

// Differentiable primitives. Every op records its output on the tape of its
// first operand; shape errors throw ShapeError naming the op and the shapes.

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
/// a + bias, with bias of shape [1, cols(a)] broadcast over rows.
Var add_bias(Var a, Var bias);
/// alpha * a + beta, elementwise.
Var affine(Var a, double alpha, double beta = 0.0);

Var relu(Var a);
Var elu(Var a);
Var tanh(Var a);
Var sigmoid(Var a);
Var abs(Var a);

Var sum(Var a);
Var mean(Var a);
/// Per-row squared L2 distance, [m,n] x [m,n] -> [m,1].
Var sq_dist_rows(Var a, Var b);
/// Weighted sum of all entries with constant weights of the same shape.
Var weighted_sum(Var a, const Tensor& weights);

/// Same value, no gradient flows back into `a`.
Var stop_gradient(Var a);
/// Forward: the value of `quantized`. Backward: the full upstream gradient is
/// delivered to `bypass`; `quantized` receives nothing.
Var straight_through(Var quantized, Var bypass);

Var slice_cols(Var a, std::size_t begin, std::size_t count);
Var slice_rows(Var a, std::size_t begin, std::size_t count);
/// out[i] = a[i, index[i]], shape [m,1].
Var gather_cols(Var a, std::span<const std::size_t> index);
/// out[i,:] = a[index[i],:]; gradients scatter-add.
Var gather_rows(Var a, std::span<const std::size_t> index);
Var reshape(Var a, std::size_t rows, std::size_t cols);
Var concat_rows(std::span<const Var> parts);
Var concat_cols(std::span<const Var> parts);
/// Row-wise vector-matrix product: x [m,n], w [m, n*k] holding one n x k
/// matrix per row (row-major) -> [m,k].
Var rowwise_matvec(Var x, Var w, std::size_t k);

/// Gated recurrent update from precomputed projections. xp and hp are
/// [m, 3H] with gate blocks (reset, update, candidate); h is [m, H].
/// r = sig(xp_r + hp_r), z = sig(xp_z + hp_z), n = tanh(xp_n + r * hp_n),
/// h' = (1 - z) * n + z * h.
Var gru_cell(Var xp, Var hp, Var h);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }

/// Primitive kinds reachable through forward_primitive().
enum class OpKind {
  kMatmul,
  kAdd,
  kMul,
  kAddBias,
  kRelu,
  kElu,
  kTanh,
  kSigmoid,
  kSum,
  kMean,
  kSqDistRows,
  kStopGradient,
  kStraightThrough,
};

std::string_view op_name(OpKind kind);

/// Generic entry point dispatching on the op kind; arity is checked.
Var forward_primitive(OpKind kind, std::span<const Var> inputs);

}  // namespace lagma::ad
