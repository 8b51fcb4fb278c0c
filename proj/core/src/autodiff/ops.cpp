#include "lagma/autodiff/ops.hpp"

#include <cmath>
#include <string>

#include "lagma/common/error.hpp"

namespace lagma::ad {

namespace {

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// tanh through one exp call, several times cheaper than std::tanh. Near
/// zero 1 - e cancels, so small arguments go to std::tanh.
double fast_tanh(double x) {
  const double ax = std::abs(x);
  if (ax < 1e-3) return std::tanh(x);
  const double e = std::exp(-2.0 * ax);
  const double t = (1.0 - e) / (1.0 + e);
  return x < 0.0 ? -t : t;
}

}  // namespace

namespace {

[[noreturn]] void shape_fail(std::string_view op, const Tensor& a, const Tensor& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + a.shape_string() + " and " +
                   b.shape_string());
}

void require_same(std::string_view op, Var a, Var b) {
  if (a.tape() != b.tape()) throw Error(std::string(op) + ": operands on different tapes");
  if (!a.value().same_shape(b.value())) shape_fail(op, a.value(), b.value());
}

}  // namespace

Var matmul(Var a, Var b) {
  if (a.tape() != b.tape()) throw Error("matmul: operands on different tapes");
  if (a.cols() != b.rows()) shape_fail("matmul", a.value(), b.value());
  Tape& tape = *a.tape();
  return tape.record(matmul_plain(a.value(), b.value()), {a, b},
                     [a, b](Tape& t, const Tensor& g) {
                       if (Tensor* ga = t.grad_slot(a)) matmul_nt_into(*ga, g, b.value());
                       if (Tensor* gb = t.grad_slot(b)) matmul_tn_into(*gb, a.value(), g);
                     });
}

Var add(Var a, Var b) {
  require_same("add", a, b);
  Tensor y = a.value();
  add_into(y, b.value());
  return a.tape()->record(std::move(y), {a, b}, [a, b](Tape& t, const Tensor& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Var sub(Var a, Var b) {
  require_same("sub", a, b);
  Tensor y = a.value();
  axpy_into(y, -1.0, b.value());
  return a.tape()->record(std::move(y), {a, b}, [a, b](Tape& t, const Tensor& g) {
    t.accumulate(a, g);
    if (Tensor* gb = t.grad_slot(b)) axpy_into(*gb, -1.0, g);
  });
}

Var mul(Var a, Var b) {
  require_same("mul", a, b);
  const Tensor& x = a.value();
  const Tensor& z = b.value();
  Tensor y(x.rows(), x.cols());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[i] * z[i];
  return a.tape()->record(std::move(y), {a, b}, [a, b](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_slot(a)) {
      const Tensor& zb = b.value();
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * zb[i];
    }
    if (Tensor* gb = t.grad_slot(b)) {
      const Tensor& xa = a.value();
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] += g[i] * xa[i];
    }
  });
}

Var add_bias(Var a, Var bias) {
  if (a.tape() != bias.tape()) throw Error("add_bias: operands on different tapes");
  const Tensor& x = a.value();
  const Tensor& bv = bias.value();
  if (bv.rows() != 1 || bv.cols() != x.cols()) shape_fail("add_bias", x, bv);
  Tensor y = x;
  for (std::size_t r = 0; r < y.rows(); ++r) {
    auto row = y.row_span(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += bv[c];
  }
  return a.tape()->record(std::move(y), {a, bias}, [a, bias](Tape& t, const Tensor& g) {
    t.accumulate(a, g);
    if (Tensor* gb = t.grad_slot(bias)) {
      for (std::size_t r = 0; r < g.rows(); ++r) {
        auto row = g.row_span(r);
        for (std::size_t c = 0; c < row.size(); ++c) (*gb)[c] += row[c];
      }
    }
  });
}

Var affine(Var a, double alpha, double beta) {
  const Tensor& x = a.value();
  Tensor y(x.rows(), x.cols());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = alpha * x[i] + beta;
  return a.tape()->record(std::move(y), {a}, [a, alpha](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_slot(a)) axpy_into(*ga, alpha, g);
  });
}

Var relu(Var a) {
  const Tensor& x = a.value();
  Tensor y(x.rows(), x.cols());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
  return a.tape()->record(std::move(y), {a}, [a](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_slot(a)) {
      const Tensor& xv = a.value();
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (xv[i] > 0.0) (*ga)[i] += g[i];
      }
    }
  });
}

Var elu(Var a) {
  const Tensor& x = a.value();
  Tensor y(x.rows(), x.cols());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : std::expm1(x[i]);
  return a.tape()->record(std::move(y), {a}, [a](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_slot(a)) {
      const Tensor& xv = a.value();
      for (std::size_t i = 0; i < g.size(); ++i) {
        (*ga)[i] += g[i] * (xv[i] > 0.0 ? 1.0 : std::exp(xv[i]));
      }
    }
  });
}

Var tanh(Var a) {
  const Tensor& x = a.value();
  Tensor y(x.rows(), x.cols());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::tanh(x[i]);
  return a.tape()->record(std::move(y), {a}, [a](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_slot(a)) {
      const Tensor& xv = a.value();
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double th = std::tanh(xv[i]);
        (*ga)[i] += g[i] * (1.0 - th * th);
      }
    }
  });
}

Var sigmoid(Var a) {
  const Tensor& x = a.value();
  Tensor y(x.rows(), x.cols());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = 1.0 / (1.0 + std::exp(-x[i]));
  return a.tape()->record(std::move(y), {a}, [a](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_slot(a)) {
      const Tensor& xv = a.value();
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double s = 1.0 / (1.0 + std::exp(-xv[i]));
        (*ga)[i] += g[i] * s * (1.0 - s);
      }
    }
  });
}

Var abs(Var a) {
  const Tensor& x = a.value();
  Tensor y(x.rows(), x.cols());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::abs(x[i]);
  return a.tape()->record(std::move(y), {a}, [a](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_slot(a)) {
      const Tensor& xv = a.value();
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double s = xv[i] > 0.0 ? 1.0 : (xv[i] < 0.0 ? -1.0 : 0.0);
        (*ga)[i] += g[i] * s;
      }
    }
  });
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  return a.tape()->record(Tensor::scalar(s), {a}, [a](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_slot(a)) {
      for (auto& v : ga->data()) v += g[0];
    }
  });
}

Var mean(Var a) {
  const std::size_t n = a.value().size();
  if (n == 0) throw ShapeError("mean: empty tensor " + a.value().shape_string());
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  const double inv = 1.0 / static_cast<double>(n);
  return a.tape()->record(Tensor::scalar(s * inv), {a}, [a, inv](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_slot(a)) {
      for (auto& v : ga->data()) v += g[0] * inv;
    }
  });
}

Var sq_dist_rows(Var a, Var b) {
  require_same("sq_dist_rows", a, b);
  const Tensor& x = a.value();
  const Tensor& z = b.value();
  Tensor y(x.rows(), 1);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto xr = x.row_span(r);
    auto zr = z.row_span(r);
    double s = 0.0;
    for (std::size_t c = 0; c < xr.size(); ++c) {
      const double d = xr[c] - zr[c];
      s += d * d;
    }
    y[r] = s;
  }
  return a.tape()->record(std::move(y), {a, b}, [a, b](Tape& t, const Tensor& g) {
    Tensor* ga = t.grad_slot(a);
    Tensor* gb = t.grad_slot(b);
    const Tensor& xv = a.value();
    const Tensor& zv = b.value();
    const std::size_t cols = xv.cols();
    for (std::size_t r = 0; r < xv.rows(); ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        const double d = 2.0 * g[r] * (xv(r, c) - zv(r, c));
        if (ga != nullptr) (*ga)(r, c) += d;
        if (gb != nullptr) (*gb)(r, c) -= d;
      }
    }
  });
}

Var weighted_sum(Var a, const Tensor& weights) {
  if (!a.value().same_shape(weights)) shape_fail("weighted_sum", a.value(), weights);
  double s = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) s += weights[i] * a.value()[i];
  return a.tape()->record(Tensor::scalar(s), {a}, [a, weights](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_slot(a)) axpy_into(*ga, g[0], weights);
  });
}

Var stop_gradient(Var a) { return a.tape()->constant(a.value()); }

Var straight_through(Var quantized, Var bypass) {
  require_same("straight_through", quantized, bypass);
  return quantized.tape()->record(quantized.value(), {bypass},
                                  [bypass](Tape& t, const Tensor& g) { t.accumulate(bypass, g); });
}

Var slice_cols(Var a, std::size_t begin, std::size_t count) {
  const Tensor& x = a.value();
  if (begin + count > x.cols() || count == 0) {
    throw ShapeError("slice_cols: columns [" + std::to_string(begin) + "," +
                     std::to_string(begin + count) + ") of " + x.shape_string());
  }
  Tensor y(x.rows(), count);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < count; ++c) y(r, c) = x(r, begin + c);
  }
  return a.tape()->record(std::move(y), {a}, [a, begin, count](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_slot(a)) {
      for (std::size_t r = 0; r < g.rows(); ++r) {
        for (std::size_t c = 0; c < count; ++c) (*ga)(r, begin + c) += g(r, c);
      }
    }
  });
}

Var gather_cols(Var a, std::span<const std::size_t> index) {
  const Tensor& x = a.value();
  if (index.size() != x.rows()) {
    throw ShapeError("gather_cols: " + std::to_string(index.size()) + " indices for " +
                     x.shape_string());
  }
  Tensor y(x.rows(), 1);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    if (index[r] >= x.cols()) throw ShapeError("gather_cols: index out of range");
    y[r] = x(r, index[r]);
  }
  std::vector<std::size_t> idx(index.begin(), index.end());
  return a.tape()->record(std::move(y), {a}, [a, idx = std::move(idx)](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_slot(a)) {
      for (std::size_t r = 0; r < idx.size(); ++r) (*ga)(r, idx[r]) += g[r];
    }
  });
}

Var gather_rows(Var a, std::span<const std::size_t> index) {
  const Tensor& x = a.value();
  Tensor y(index.size(), x.cols());
  for (std::size_t r = 0; r < index.size(); ++r) {
    if (index[r] >= x.rows()) throw ShapeError("gather_rows: index out of range");
    auto src = x.row_span(index[r]);
    auto dst = y.row_span(r);
    std::copy(src.begin(), src.end(), dst.begin());
  }
  std::vector<std::size_t> idx(index.begin(), index.end());
  return a.tape()->record(std::move(y), {a}, [a, idx = std::move(idx)](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_slot(a)) {
      for (std::size_t r = 0; r < idx.size(); ++r) {
        auto src = g.row_span(r);
        auto dst = ga->row_span(idx[r]);
        for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
      }
    }
  });
}

Var reshape(Var a, std::size_t rows, std::size_t cols) {
  Tensor y = a.value();
  y.reshape(rows, cols);
  return a.tape()->record(std::move(y), {a}, [a](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_slot(a)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
    }
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no operands");
  const std::size_t cols = parts[0].cols();
  std::size_t rows = 0;
  for (Var p : parts) {
    if (p.cols() != cols) shape_fail("concat_rows", parts[0].value(), p.value());
    rows += p.rows();
  }
  Tensor y(rows, cols);
  std::size_t off = 0;
  for (Var p : parts) {
    auto src = p.value().data();
    std::copy(src.begin(), src.end(), y.data().begin() + static_cast<std::ptrdiff_t>(off));
    off += src.size();
  }
  std::vector<Var> keep(parts.begin(), parts.end());
  return parts[0].tape()->record(std::move(y), parts, [keep](Tape& t, const Tensor& g) {
    std::size_t off2 = 0;
    for (Var p : keep) {
      const std::size_t n = p.value().size();
      if (Tensor* gp = t.grad_slot(p)) {
        for (std::size_t i = 0; i < n; ++i) (*gp)[i] += g[off2 + i];
      }
      off2 += n;
    }
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no operands");
  const std::size_t rows = parts[0].rows();
  std::size_t cols = 0;
  for (Var p : parts) {
    if (p.rows() != rows) shape_fail("concat_cols", parts[0].value(), p.value());
    cols += p.cols();
  }
  Tensor y(rows, cols);
  std::size_t off = 0;
  for (Var p : parts) {
    const Tensor& v = p.value();
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < v.cols(); ++c) y(r, off + c) = v(r, c);
    }
    off += v.cols();
  }
  std::vector<Var> keep(parts.begin(), parts.end());
  return parts[0].tape()->record(std::move(y), parts, [keep](Tape& t, const Tensor& g) {
    std::size_t off2 = 0;
    for (Var p : keep) {
      const std::size_t pc = p.cols();
      if (Tensor* gp = t.grad_slot(p)) {
        for (std::size_t r = 0; r < g.rows(); ++r) {
          for (std::size_t c = 0; c < pc; ++c) (*gp)(r, c) += g(r, off2 + c);
        }
      }
      off2 += pc;
    }
  });
}

Var rowwise_matvec(Var x, Var w, std::size_t k) {
  if (x.tape() != w.tape()) throw Error("rowwise_matvec: operands on different tapes");
  const Tensor& xv = x.value();
  const Tensor& wv = w.value();
  const std::size_t n = xv.cols();
  if (wv.rows() != xv.rows() || wv.cols() != n * k) shape_fail("rowwise_matvec", xv, wv);
  Tensor y(xv.rows(), k);
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    const double* wr = wv.row_span(r).data();
    for (std::size_t i = 0; i < n; ++i) {
      const double xi = xv(r, i);
      for (std::size_t j = 0; j < k; ++j) y(r, j) += xi * wr[i * k + j];
    }
  }
  return x.tape()->record(std::move(y), {x, w}, [x, w, k](Tape& t, const Tensor& g) {
    Tensor* gx = t.grad_slot(x);
    Tensor* gw = t.grad_slot(w);
    const Tensor& xv2 = x.value();
    const Tensor& wv2 = w.value();
    const std::size_t n2 = xv2.cols();
    for (std::size_t r = 0; r < xv2.rows(); ++r) {
      const double* wr = wv2.row_span(r).data();
      for (std::size_t i = 0; i < n2; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
          acc += g(r, j) * wr[i * k + j];
          if (gw != nullptr) (*gw)(r, i * k + j) += g(r, j) * xv2(r, i);
        }
        if (gx != nullptr) (*gx)(r, i) += acc;
      }
    }
  });
}

std::string_view op_name(OpKind kind) {
  switch (kind) {
    case OpKind::kMatmul: return "matmul";
    case OpKind::kAdd: return "add";
    case OpKind::kMul: return "mul";
    case OpKind::kAddBias: return "add_bias";
    case OpKind::kRelu: return "relu";
    case OpKind::kElu: return "elu";
    case OpKind::kTanh: return "tanh";
    case OpKind::kSigmoid: return "sigmoid";
    case OpKind::kSum: return "sum";
    case OpKind::kMean: return "mean";
    case OpKind::kSqDistRows: return "sq_dist_rows";
    case OpKind::kStopGradient: return "stop_gradient";
    case OpKind::kStraightThrough: return "straight_through";
  }
  return "unknown";
}

Var forward_primitive(OpKind kind, std::span<const Var> inputs) {
  const bool binary = kind == OpKind::kMatmul || kind == OpKind::kAdd || kind == OpKind::kMul ||
                      kind == OpKind::kAddBias || kind == OpKind::kSqDistRows ||
                      kind == OpKind::kStraightThrough;
  const std::size_t arity = binary ? 2 : 1;
  if (inputs.size() != arity) {
    throw ShapeError(std::string(op_name(kind)) + ": expected " + std::to_string(arity) +
                     " operands, got " + std::to_string(inputs.size()));
  }
  switch (kind) {
    case OpKind::kMatmul: return matmul(inputs[0], inputs[1]);
    case OpKind::kAdd: return add(inputs[0], inputs[1]);
    case OpKind::kMul: return mul(inputs[0], inputs[1]);
    case OpKind::kAddBias: return add_bias(inputs[0], inputs[1]);
    case OpKind::kRelu: return relu(inputs[0]);
    case OpKind::kElu: return elu(inputs[0]);
    case OpKind::kTanh: return tanh(inputs[0]);
    case OpKind::kSigmoid: return sigmoid(inputs[0]);
    case OpKind::kSum: return sum(inputs[0]);
    case OpKind::kMean: return mean(inputs[0]);
    case OpKind::kSqDistRows: return sq_dist_rows(inputs[0], inputs[1]);
    case OpKind::kStopGradient: return stop_gradient(inputs[0]);
    case OpKind::kStraightThrough: return straight_through(inputs[0], inputs[1]);
  }
  throw Error("forward_primitive: unknown op");
}

Var slice_rows(Var a, std::size_t begin, std::size_t count) {
  const Tensor& x = a.value();
  if (begin + count > x.rows()) {
    throw ShapeError("slice_rows: rows [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") of " + x.shape_string());
  }
  const std::size_t cols = x.cols();
  const auto first = x.data().begin() + static_cast<std::ptrdiff_t>(begin * cols);
  Tensor y(count, cols, std::vector<double>(first, first + static_cast<std::ptrdiff_t>(count * cols)));
  return a.tape()->record(std::move(y), {a}, [a, begin](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_slot(a)) {
      const std::size_t off = begin * g.cols();
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[off + i] += g[i];
    }
  });
}

Var gru_cell(Var xp, Var hp, Var h) {
  const Tensor& xv = xp.value();
  const Tensor& hpv = hp.value();
  const Tensor& hv = h.value();
  const std::size_t m = hv.rows();
  const std::size_t H = hv.cols();
  if (xv.rows() != m || xv.cols() != 3 * H) shape_fail("gru_cell", xv, hv);
  if (!hpv.same_shape(xv)) shape_fail("gru_cell", xv, hpv);
  if (xp.tape() != hp.tape() || xp.tape() != h.tape()) throw Error("gru_cell: operands on different tapes");

  // gates holds r, z, n side by side for the backward pass.
  Tensor gates(m, 3 * H);
  Tensor y(m, H);
  for (std::size_t i = 0; i < m; ++i) {
    const double* x = xv.row_span(i).data();
    const double* p = hpv.row_span(i).data();
    const double* hh = hv.row_span(i).data();
    double* gr = gates.row_span(i).data();
    double* out = y.row_span(i).data();
    for (std::size_t j = 0; j < H; ++j) {
      const double r = logistic(x[j] + p[j]);
      const double z = logistic(x[H + j] + p[H + j]);
      const double n = fast_tanh(x[2 * H + j] + r * p[2 * H + j]);
      gr[j] = r;
      gr[H + j] = z;
      gr[2 * H + j] = n;
      out[j] = (1.0 - z) * n + z * hh[j];
    }
  }
  return xp.tape()->record(
      std::move(y), {xp, hp, h}, [xp, hp, h, gates = std::move(gates)](Tape& t, const Tensor& g) {
        Tensor* gx = t.grad_slot(xp);
        Tensor* gp = t.grad_slot(hp);
        Tensor* gh = t.grad_slot(h);
        const Tensor& hv2 = h.value();
        const Tensor& pv = hp.value();
        const std::size_t H2 = hv2.cols();
        for (std::size_t i = 0; i < hv2.rows(); ++i) {
          const double* gr = gates.row_span(i).data();
          const double* go = g.row_span(i).data();
          const double* hh = hv2.row_span(i).data();
          const double* p = pv.row_span(i).data();
          for (std::size_t j = 0; j < H2; ++j) {
            const double r = gr[j], z = gr[H2 + j], n = gr[2 * H2 + j];
            const double dn = go[j] * (1.0 - z) * (1.0 - n * n);
            const double dz = go[j] * (hh[j] - n) * z * (1.0 - z);
            const double dr = dn * p[2 * H2 + j] * r * (1.0 - r);
            if (gx != nullptr) {
              (*gx)(i, j) += dr;
              (*gx)(i, H2 + j) += dz;
              (*gx)(i, 2 * H2 + j) += dn;
            }
            if (gp != nullptr) {
              (*gp)(i, j) += dr;
              (*gp)(i, H2 + j) += dz;
              (*gp)(i, 2 * H2 + j) += dn * r;
            }
            if (gh != nullptr) (*gh)(i, j) += go[j] * z;
          }
        }
      });
}

}  // namespace lagma::ad
