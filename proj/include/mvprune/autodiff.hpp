#pragma once

// Reverse-mode differentiation over dense 2-D tensors.
//
// A Tape records every operation in execution order; backward() walks it once
// in reverse. Leaves are either constants (no gradient) or bound Parameters,
// whose `grad` field accumulates across backward calls until zeroed.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mvprune/error.hpp"
#include "mvprune/sparse.hpp"
#include "mvprune/tensor.hpp"

namespace mvprune {

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)), grad(value.rows(), value.cols()) {}

  void zero_grad() { grad = Tensor(value.rows(), value.cols()); }
};

enum class Op {
  Constant,
  Parameter,
  MatMul,
  Add,
  AddRow,
  Sub,
  Mul,
  MulConst,
  MaskRows,
  Scale,
  Affine,
  Relu,
  Sigmoid,
  Tanh,
  Log,
  Clamp,
  Sqrt,
  Transpose,
  Sum,
  GatherCols,
  GatherRows,
  ConcatCols,
  SoftmaxRows,
  Propagate,
  DivScalar,
  SoftmaxCrossEntropy,
};

class Tape;

/// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape() const noexcept { return tape_; }
  std::size_t id() const noexcept { return id_; }
  const Tensor& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  using Pullback = std::function<void(Tape&, const Tensor& grad_out)>;

  Tape() { nodes_.reserve(256); }
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value) { return push(Op::Constant, std::move(value), {}, false, nullptr); }

  Var parameter(Parameter& p) {
    Var v = push(Op::Parameter, p.value, {}, true, nullptr);
    nodes_[v.id()].param = &p;
    return v;
  }

  const Tensor& value(std::size_t id) const { return nodes_.at(id).value; }
  Op op(std::size_t id) const { return nodes_.at(id).op; }
  bool needs_grad(std::size_t id) const { return nodes_.at(id).needs_grad; }
  const std::vector<std::size_t>& inputs(std::size_t id) const { return nodes_.at(id).inputs; }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Gradient of the last backward() target w.r.t. node `id` (zeros if unreached).
  Tensor grad(Var v) const {
    const Node& n = nodes_.at(v.id());
    return n.grad.empty() && !n.value.empty() ? Tensor(n.value.rows(), n.value.cols()) : n.grad;
  }

  /// Number of nodes whose pullback ran during the last backward().
  std::size_t last_backward_visits() const noexcept { return visits_; }

  void backward(Var loss) {
    if (loss.tape() != this) throw ContractError("backward: loss belongs to another tape");
    const Tensor& lv = value(loss.id());
    if (lv.rows() != 1 || lv.cols() != 1) {
      throw ContractError("backward: loss must be 1x1, got " + std::to_string(lv.rows()) + "x" +
                          std::to_string(lv.cols()));
    }
    for (auto& n : nodes_) n.grad = Tensor();
    visits_ = 0;
    nodes_[loss.id()].grad = Tensor(1, 1, 1.0);
    for (std::size_t i = loss.id() + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (!n.needs_grad || n.grad.empty()) continue;
      ++visits_;
      if (n.param != nullptr) {
        dense::add_inplace(n.param->grad, n.grad);
      } else if (n.pullback) {
        // Pullbacks may write into other nodes' gradients, so hand them a copy of
        // this node's gradient rather than a reference into the node vector.
        const Tensor g = n.grad;
        nodes_[i].pullback(*this, g);
      }
    }
  }

  /// Adds `contribution` into the gradient buffer of node `id`.
  void accumulate(std::size_t id, const Tensor& contribution) {
    Node& n = nodes_[id];
    if (!n.needs_grad) return;
    if (n.grad.empty()) {
      n.grad = contribution;
    } else {
      dense::add_inplace(n.grad, contribution);
    }
  }

  Var push(Op op, Tensor value, std::vector<std::size_t> inputs, Pullback pullback) {
    bool need = false;
    for (std::size_t in : inputs) need = need || nodes_.at(in).needs_grad;
    return push(op, std::move(value), std::move(inputs), need, need ? std::move(pullback) : Pullback{});
  }

 private:
  struct Node {
    Op op;
    Tensor value;
    Tensor grad;
    std::vector<std::size_t> inputs;
    Pullback pullback;
    Parameter* param = nullptr;
    bool needs_grad = false;
  };

  Var push(Op op, Tensor value, std::vector<std::size_t> inputs, bool need, Pullback pullback) {
    nodes_.push_back(Node{op, std::move(value), Tensor(), std::move(inputs), std::move(pullback), nullptr, need});
    return Var(this, nodes_.size() - 1);
  }

  std::vector<Node> nodes_;
  std::size_t visits_ = 0;
};

inline const Tensor& Var::value() const { return tape_->value(id_); }

namespace ad {

namespace detail {
inline Tape& same_tape(Var a, Var b) {
  if (a.tape() != b.tape() || a.tape() == nullptr) throw ContractError("operands live on different tapes");
  return *a.tape();
}

template <class F>
Tensor map(const Tensor& a, F f) {
  Tensor out(a.rows(), a.cols());
  auto src = a.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = f(src[i]);
  return out;
}
}  // namespace detail

inline Var matmul(Var a, Var b) {
  Tape& t = detail::same_tape(a, b);
  const std::size_t ia = a.id(), ib = b.id();
  return t.push(Op::MatMul, dense::matmul(a.value(), b.value()), {ia, ib}, [ia, ib](Tape& tp, const Tensor& g) {
    if (tp.needs_grad(ia)) tp.accumulate(ia, dense::matmul_nt(g, tp.value(ib)));
    if (tp.needs_grad(ib)) tp.accumulate(ib, dense::matmul_tn(tp.value(ia), g));
  });
}

inline Var add(Var a, Var b) {
  Tape& t = detail::same_tape(a, b);
  dense::require_same_shape(a.value(), b.value(), "add");
  Tensor out = a.value();
  dense::add_inplace(out, b.value());
  const std::size_t ia = a.id(), ib = b.id();
  return t.push(Op::Add, std::move(out), {ia, ib}, [ia, ib](Tape& tp, const Tensor& g) {
    tp.accumulate(ia, g);
    tp.accumulate(ib, g);
  });
}

/// a + row broadcast over every row of a. `row` must be 1×a.cols().
inline Var add_row(Var a, Var row) {
  Tape& t = detail::same_tape(a, row);
  const Tensor& av = a.value();
  const Tensor& rv = row.value();
  if (rv.rows() != 1 || rv.cols() != av.cols()) throw ShapeError("add_row: row vector must be 1x" + std::to_string(av.cols()));
  Tensor out = av;
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += rv(0, j);
  const std::size_t ia = a.id(), ir = row.id();
  return t.push(Op::AddRow, std::move(out), {ia, ir}, [ia, ir](Tape& tp, const Tensor& g) {
    tp.accumulate(ia, g);
    if (tp.needs_grad(ir)) {
      Tensor gr(1, g.cols());
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) gr(0, j) += g(i, j);
      tp.accumulate(ir, gr);
    }
  });
}

inline Var sub(Var a, Var b) {
  Tape& t = detail::same_tape(a, b);
  dense::require_same_shape(a.value(), b.value(), "sub");
  Tensor out = a.value();
  auto dst = out.values();
  auto src = b.value().values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] -= src[i];
  const std::size_t ia = a.id(), ib = b.id();
  return t.push(Op::Sub, std::move(out), {ia, ib}, [ia, ib](Tape& tp, const Tensor& g) {
    tp.accumulate(ia, g);
    if (tp.needs_grad(ib)) tp.accumulate(ib, detail::map(g, [](double x) { return -x; }));
  });
}

/// Elementwise product.
inline Var mul(Var a, Var b) {
  Tape& t = detail::same_tape(a, b);
  dense::require_same_shape(a.value(), b.value(), "mul");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  Tensor out(av.rows(), av.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  const std::size_t ia = a.id(), ib = b.id();
  return t.push(Op::Mul, std::move(out), {ia, ib}, [ia, ib](Tape& tp, const Tensor& g) {
    const Tensor& x = tp.value(ia);
    const Tensor& y = tp.value(ib);
    if (tp.needs_grad(ia)) {
      Tensor ga(g.rows(), g.cols());
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] = g[i] * y[i];
      tp.accumulate(ia, ga);
    }
    if (tp.needs_grad(ib)) {
      Tensor gb(g.rows(), g.cols());
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] = g[i] * x[i];
      tp.accumulate(ib, gb);
    }
  });
}

/// Elementwise product with a constant tensor that never receives gradient.
inline Var mul_const(Var a, Tensor c) {
  dense::require_same_shape(a.value(), c, "mul_const");
  const Tensor& av = a.value();
  Tensor out(av.rows(), av.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * c[i];
  const std::size_t ia = a.id();
  return a.tape()->push(Op::MulConst, std::move(out), {ia}, [ia, c = std::move(c)](Tape& tp, const Tensor& g) {
    Tensor ga(g.rows(), g.cols());
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] = g[i] * c[i];
    tp.accumulate(ia, ga);
  });
}

/// Multiplies row i of `a` by mask[i]. The mask is data: no gradient flows to it.
inline Var mask_rows(Var a, std::span<const double> mask) {
  const Tensor& av = a.value();
  if (mask.size() != av.rows()) throw ShapeError("mask_rows: mask length " + std::to_string(mask.size()) + " for " + std::to_string(av.rows()) + " rows");
  std::vector<double> m(mask.begin(), mask.end());
  Tensor out = av;
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) *= m[i];
  const std::size_t ia = a.id();
  return a.tape()->push(Op::MaskRows, std::move(out), {ia}, [ia, m = std::move(m)](Tape& tp, const Tensor& g) {
    Tensor ga = g;
    for (std::size_t i = 0; i < ga.rows(); ++i)
      for (std::size_t j = 0; j < ga.cols(); ++j) ga(i, j) *= m[i];
    tp.accumulate(ia, ga);
  });
}

inline Var scale(Var a, double s) {
  const std::size_t ia = a.id();
  return a.tape()->push(Op::Scale, detail::map(a.value(), [s](double x) { return s * x; }), {ia},
                        [ia, s](Tape& tp, const Tensor& g) { tp.accumulate(ia, detail::map(g, [s](double x) { return s * x; })); });
}

/// s·a + shift, elementwise.
inline Var affine(Var a, double s, double shift) {
  const std::size_t ia = a.id();
  return a.tape()->push(Op::Affine, detail::map(a.value(), [s, shift](double x) { return s * x + shift; }), {ia},
                        [ia, s](Tape& tp, const Tensor& g) { tp.accumulate(ia, detail::map(g, [s](double x) { return s * x; })); });
}

/// max(0, x); subgradient at exactly 0 is 0.
inline Var relu(Var a) {
  const std::size_t ia = a.id();
  return a.tape()->push(Op::Relu, detail::map(a.value(), [](double x) { return x > 0.0 ? x : 0.0; }), {ia},
                        [ia](Tape& tp, const Tensor& g) {
                          const Tensor& x = tp.value(ia);
                          Tensor ga(g.rows(), g.cols());
                          for (std::size_t i = 0; i < g.size(); ++i) ga[i] = x[i] > 0.0 ? g[i] : 0.0;
                          tp.accumulate(ia, ga);
                        });
}

inline Var sigmoid(Var a) {
  const std::size_t ia = a.id();
  Tensor out = detail::map(a.value(), dense::stable_sigmoid);
  Tensor y = out;
  return a.tape()->push(Op::Sigmoid, std::move(out), {ia}, [ia, y = std::move(y)](Tape& tp, const Tensor& g) {
    Tensor ga(g.rows(), g.cols());
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] = g[i] * y[i] * (1.0 - y[i]);
    tp.accumulate(ia, ga);
  });
}

inline Var tanh(Var a) {
  const std::size_t ia = a.id();
  return a.tape()->push(Op::Tanh, detail::map(a.value(), [](double x) { return std::tanh(x); }), {ia},
                        [ia](Tape& tp, const Tensor& g) {
                          const Tensor& x = tp.value(ia);
                          Tensor ga(g.rows(), g.cols());
                          for (std::size_t i = 0; i < g.size(); ++i) {
                            const double y = std::tanh(x[i]);
                            ga[i] = g[i] * (1.0 - y * y);
                          }
                          tp.accumulate(ia, ga);
                        });
}

inline Var log(Var a) {
  const std::size_t ia = a.id();
  return a.tape()->push(Op::Log, detail::map(a.value(), [](double x) { return std::log(x); }), {ia},
                        [ia](Tape& tp, const Tensor& g) {
                          const Tensor& x = tp.value(ia);
                          Tensor ga(g.rows(), g.cols());
                          for (std::size_t i = 0; i < g.size(); ++i) ga[i] = g[i] / x[i];
                          tp.accumulate(ia, ga);
                        });
}

/// Clamp to [lo, hi]; gradient is passed only strictly inside the interval.
inline Var clamp(Var a, double lo, double hi) {
  const std::size_t ia = a.id();
  return a.tape()->push(Op::Clamp, detail::map(a.value(), [lo, hi](double x) { return std::clamp(x, lo, hi); }), {ia},
                        [ia, lo, hi](Tape& tp, const Tensor& g) {
                          const Tensor& x = tp.value(ia);
                          Tensor ga(g.rows(), g.cols());
                          for (std::size_t i = 0; i < g.size(); ++i) ga[i] = (x[i] > lo && x[i] < hi) ? g[i] : 0.0;
                          tp.accumulate(ia, ga);
                        });
}

inline Var sqrt(Var a) {
  const std::size_t ia = a.id();
  return a.tape()->push(Op::Sqrt, detail::map(a.value(), [](double x) { return std::sqrt(x); }), {ia},
                        [ia](Tape& tp, const Tensor& g) {
                          const Tensor& x = tp.value(ia);
                          Tensor ga(g.rows(), g.cols());
                          for (std::size_t i = 0; i < g.size(); ++i) ga[i] = g[i] * 0.5 / std::sqrt(x[i]);
                          tp.accumulate(ia, ga);
                        });
}

inline Var transpose(Var a) {
  const std::size_t ia = a.id();
  return a.tape()->push(Op::Transpose, dense::transpose(a.value()), {ia},
                        [ia](Tape& tp, const Tensor& g) { tp.accumulate(ia, dense::transpose(g)); });
}

/// Sum of all entries as a 1×1 tensor.
inline Var sum(Var a) {
  const std::size_t ia = a.id();
  const std::size_t r = a.rows(), c = a.cols();
  return a.tape()->push(Op::Sum, Tensor::scalar(dense::sum(a.value())), {ia},
                        [ia, r, c](Tape& tp, const Tensor& g) { tp.accumulate(ia, Tensor(r, c, g.item())); });
}

inline Var mean(Var a) {
  const double n = static_cast<double>(a.value().size());
  return scale(sum(a), 1.0 / n);
}

/// Column-wise mean over rows, 1×cols.
inline Var mean_rows(Var a) {
  const std::size_t n = a.rows();
  if (n == 0) throw ContractError("mean_rows: no rows");
  return matmul(a.tape()->constant(Tensor(1, n, 1.0 / static_cast<double>(n))), a);
}

/// Columns `cols` of `a`, in the given order.
inline Var gather_cols(Var a, std::vector<std::size_t> cols) {
  const Tensor& av = a.value();
  Tensor out(av.rows(), cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j) {
    if (cols[j] >= av.cols()) throw ShapeError("gather_cols: column index out of range");
    for (std::size_t i = 0; i < av.rows(); ++i) out(i, j) = av(i, cols[j]);
  }
  const std::size_t ia = a.id();
  const std::size_t in_cols = av.cols();
  return a.tape()->push(Op::GatherCols, std::move(out), {ia}, [ia, in_cols, cols = std::move(cols)](Tape& tp, const Tensor& g) {
    Tensor ga(g.rows(), in_cols);
    for (std::size_t j = 0; j < cols.size(); ++j)
      for (std::size_t i = 0; i < g.rows(); ++i) ga(i, cols[j]) += g(i, j);
    tp.accumulate(ia, ga);
  });
}

/// Rows `rows` of `a`, in the given order.
inline Var gather_rows(Var a, std::vector<std::size_t> rows) {
  const Tensor& av = a.value();
  Tensor out(rows.size(), av.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= av.rows()) throw ShapeError("gather_rows: row index out of range");
    for (std::size_t j = 0; j < av.cols(); ++j) out(i, j) = av(rows[i], j);
  }
  const std::size_t ia = a.id();
  const std::size_t in_rows = av.rows();
  return a.tape()->push(Op::GatherRows, std::move(out), {ia}, [ia, in_rows, rows = std::move(rows)](Tape& tp, const Tensor& g) {
    Tensor ga(in_rows, g.cols());
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < g.cols(); ++j) ga(rows[i], j) += g(i, j);
    tp.accumulate(ia, ga);
  });
}

inline Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ContractError("concat_cols: no inputs");
  Tape* t = parts.front().tape();
  const std::size_t r = parts.front().rows();
  std::size_t total = 0;
  std::vector<std::size_t> ids, widths;
  for (const Var& p : parts) {
    if (p.tape() != t) throw ContractError("concat_cols: operands live on different tapes");
    if (p.rows() != r) throw ShapeError("concat_cols: row count mismatch");
    ids.push_back(p.id());
    widths.push_back(p.cols());
    total += p.cols();
  }
  Tensor out(r, total);
  std::size_t off = 0;
  for (const Var& p : parts) {
    const Tensor& v = p.value();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < v.cols(); ++j) out(i, off + j) = v(i, j);
    off += v.cols();
  }
  std::vector<std::size_t> inputs = ids;
  return t->push(Op::ConcatCols, std::move(out), std::move(inputs), [ids, widths](Tape& tp, const Tensor& g) {
    std::size_t o = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (tp.needs_grad(ids[k])) {
        Tensor gk(g.rows(), widths[k]);
        for (std::size_t i = 0; i < g.rows(); ++i)
          for (std::size_t j = 0; j < widths[k]; ++j) gk(i, j) = g(i, o + j);
        tp.accumulate(ids[k], gk);
      }
      o += widths[k];
    }
  });
}

/// Row-wise softmax, computed with the max-shift for stability.
inline Var softmax_rows(Var a) {
  const Tensor& av = a.value();
  Tensor out(av.rows(), av.cols());
  for (std::size_t i = 0; i < av.rows(); ++i) {
    double mx = -INFINITY;
    for (std::size_t j = 0; j < av.cols(); ++j) mx = std::max(mx, av(i, j));
    double z = 0.0;
    for (std::size_t j = 0; j < av.cols(); ++j) z += (out(i, j) = std::exp(av(i, j) - mx));
    for (std::size_t j = 0; j < av.cols(); ++j) out(i, j) /= z;
  }
  const std::size_t ia = a.id();
  Tensor y = out;
  return a.tape()->push(Op::SoftmaxRows, std::move(out), {ia}, [ia, y = std::move(y)](Tape& tp, const Tensor& g) {
    Tensor ga(g.rows(), g.cols());
    for (std::size_t i = 0; i < g.rows(); ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < g.cols(); ++j) dot += g(i, j) * y(i, j);
      for (std::size_t j = 0; j < g.cols(); ++j) ga(i, j) = y(i, j) * (g(i, j) - dot);
    }
    tp.accumulate(ia, ga);
  });
}

/// m · x for a constant sparse matrix m (normalized adjacency message passing).
inline Var propagate(std::shared_ptr<const SparseMatrix> m, Var x) {
  const std::size_t ix = x.id();
  Tensor out = m->multiply(x.value());
  return x.tape()->push(Op::Propagate, std::move(out), {ix}, [ix, m = std::move(m)](Tape& tp, const Tensor& g) {
    tp.accumulate(ix, m->multiply_transposed(g));
  });
}

/// a / s for a 1×1 divisor s.
inline Var div_scalar(Var a, Var s) {
  Tape& t = detail::same_tape(a, s);
  if (s.rows() != 1 || s.cols() != 1) throw ShapeError("div_scalar: divisor must be 1x1");
  const double d = s.value().item();
  Tensor out = detail::map(a.value(), [d](double x) { return x / d; });
  const std::size_t ia = a.id(), is = s.id();
  return t.push(Op::DivScalar, std::move(out), {ia, is}, [ia, is](Tape& tp, const Tensor& g) {
    const double dv = tp.value(is).item();
    if (tp.needs_grad(ia)) tp.accumulate(ia, detail::map(g, [dv](double x) { return x / dv; }));
    if (tp.needs_grad(is)) {
      const Tensor& av = tp.value(ia);
      double acc = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * av[i];
      tp.accumulate(is, Tensor::scalar(-acc / (dv * dv)));
    }
  });
}

/// Cross-entropy of a 1×C logit row against class `label`, as a 1×1 tensor.
inline Var softmax_cross_entropy(Var logits, std::size_t label) {
  const Tensor& z = logits.value();
  if (z.rows() != 1) throw ShapeError("softmax_cross_entropy: logits must be a single row");
  if (label >= z.cols()) throw ContractError("softmax_cross_entropy: label out of range");
  double mx = -INFINITY;
  for (double v : z.values()) mx = std::max(mx, v);
  double s = 0.0;
  for (double v : z.values()) s += std::exp(v - mx);
  const double lse = mx + std::log(s);
  const std::size_t il = logits.id();
  return logits.tape()->push(Op::SoftmaxCrossEntropy, Tensor::scalar(lse - z[label]), {il},
                             [il, label, lse](Tape& tp, const Tensor& g) {
                               const Tensor& zz = tp.value(il);
                               Tensor gl(1, zz.cols());
                               for (std::size_t j = 0; j < zz.cols(); ++j) gl[j] = g.item() * (std::exp(zz[j] - lse) - (j == label ? 1.0 : 0.0));
                               tp.accumulate(il, gl);
                             });
}

}  // namespace ad

inline Var operator+(Var a, Var b) { return ad::add(a, b); }
inline Var operator-(Var a, Var b) { return ad::sub(a, b); }
inline Var operator*(Var a, Var b) { return ad::mul(a, b); }

}  // namespace mvprune
