// Copyright 2026 The NBF Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "nbf/numkit/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace nbf::numkit {

const Matrix& Var::value() const {
  if (!tape_) throw std::logic_error("Var: use of an unbound variable");
  return tape_->value(id_);
}

double Var::scalar() const {
  const Matrix& v = value();
  if (v.rows() != 1 || v.cols() != 1) throw std::logic_error("Var::scalar: value is not 1x1");
  return v(0, 0);
}

Var Tape::constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  n.op = "constant";
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::variable(Matrix value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  n.op = "variable";
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::record(Matrix value, std::initializer_list<Var> parents, BackwardFn backward,
                 std::string_view op, bool differentiable) {
  return record(std::move(value), std::span<const Var>(parents.begin(), parents.size()),
                std::move(backward), op, differentiable);
}

Var Tape::record(Matrix value, std::span<const Var> parents, BackwardFn backward,
                 std::string_view op, bool differentiable) {
  Node n;
  n.value = std::move(value);
  n.op = op;
  n.differentiable = differentiable;
  for (const Var& p : parents) {
    if (p.tape() != this) throw std::logic_error("Tape::record: parent from another tape");
    n.requires_grad = n.requires_grad || nodes_[p.id()].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

void Tape::backward(Var root) {
  if (root.tape() != this) throw std::logic_error("Tape::backward: root from another tape");
  Node& r = nodes_[root.id()];
  if (r.value.rows() != 1 || r.value.cols() != 1) {
    throw std::logic_error("Tape::backward: root must be 1x1");
  }
  if (!r.requires_grad) return;
  r.grad = Matrix::Ones(1, 1);
  r.has_grad = true;
  for (int id = root.id(); id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.has_grad || !n.requires_grad) continue;
    if (!n.differentiable) {
      throw NonDifferentiableError("gradient requested through non-differentiable primitive '" +
                                   std::string(n.op) + "'");
    }
    if (n.backward) n.backward(*this, id);
  }
}

Matrix Tape::grad(Var v) const {
  const Node& n = nodes_[v.id()];
  if (!n.has_grad) return Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

namespace {

struct Shape {
  Index rows;
  Index cols;
};

Index broadcast_dim(Index a, Index b, std::string_view op) {
  if (a == b) return a;
  if (a == 1) return b;
  if (b == 1) return a;
  throw std::invalid_argument(std::string(op) + ": incompatible shapes for broadcasting");
}

Shape broadcast_shape(const Matrix& a, const Matrix& b, std::string_view op) {
  return {broadcast_dim(a.rows(), b.rows(), op), broadcast_dim(a.cols(), b.cols(), op)};
}

Matrix expand(const Matrix& m, Shape s) {
  if (m.rows() == s.rows && m.cols() == s.cols) return m;
  return m.replicate(s.rows / m.rows(), s.cols / m.cols());
}

Matrix reduce_to(const Matrix& g, Index rows, Index cols) {
  if (g.rows() == rows && g.cols() == cols) return g;
  if (rows == 1 && cols == 1) return Matrix::Constant(1, 1, g.sum());
  if (rows == 1) return g.colwise().sum();
  return g.rowwise().sum();
}

template <typename Fn>
Var unary(Var a, Matrix out, std::string_view op, Fn local_grad) {
  const int ia = a.id();
  return a.tape()->record(std::move(out), {a},
                          [ia, local_grad](Tape& t, int self) {
                            t.accumulate(ia, local_grad(t.value(ia), t.value(self),
                                                        t.adjoint(self)));
                          },
                          op);
}

}  // namespace

Var add(Var a, Var b) {
  const Shape s = broadcast_shape(a.value(), b.value(), "add");
  Matrix out = expand(a.value(), s);
  if (b.rows() == s.rows && b.cols() == s.cols) {
    out += b.value();
  } else if (b.rows() == 1 && b.cols() == s.cols) {
    out.rowwise() += b.value().row(0);
  } else {
    out += expand(b.value(), s);
  }
  const int ia = a.id(), ib = b.id();
  return a.tape()->record(std::move(out), {a, b},
                          [ia, ib](Tape& t, int self) {
                            const Matrix& g = t.adjoint(self);
                            if (t.requires_grad(ia)) {
                              t.accumulate(ia, reduce_to(g, t.value(ia).rows(), t.value(ia).cols()));
                            }
                            if (t.requires_grad(ib)) {
                              t.accumulate(ib, reduce_to(g, t.value(ib).rows(), t.value(ib).cols()));
                            }
                          },
                          "add");
}

Var sub(Var a, Var b) {
  const Shape s = broadcast_shape(a.value(), b.value(), "sub");
  Matrix out = expand(a.value(), s) - expand(b.value(), s);
  const int ia = a.id(), ib = b.id();
  return a.tape()->record(std::move(out), {a, b},
                          [ia, ib](Tape& t, int self) {
                            const Matrix& g = t.adjoint(self);
                            if (t.requires_grad(ia)) {
                              t.accumulate(ia, reduce_to(g, t.value(ia).rows(), t.value(ia).cols()));
                            }
                            if (t.requires_grad(ib)) {
                              t.accumulate(ib, -reduce_to(g, t.value(ib).rows(), t.value(ib).cols()));
                            }
                          },
                          "sub");
}

Var mul(Var a, Var b) {
  const Shape s = broadcast_shape(a.value(), b.value(), "mul");
  Matrix out = expand(a.value(), s).cwiseProduct(expand(b.value(), s));
  const int ia = a.id(), ib = b.id();
  return a.tape()->record(
      std::move(out), {a, b},
      [ia, ib, s](Tape& t, int self) {
        const Matrix& g = t.adjoint(self);
        const Matrix& va = t.value(ia);
        const Matrix& vb = t.value(ib);
        if (t.requires_grad(ia)) {
          t.accumulate(ia, reduce_to(g.cwiseProduct(expand(vb, s)), va.rows(), va.cols()));
        }
        if (t.requires_grad(ib)) {
          t.accumulate(ib, reduce_to(g.cwiseProduct(expand(va, s)), vb.rows(), vb.cols()));
        }
      },
      "mul");
}

Var div(Var a, Var b) {
  const Shape s = broadcast_shape(a.value(), b.value(), "div");
  Matrix out = expand(a.value(), s).cwiseQuotient(expand(b.value(), s));
  const int ia = a.id(), ib = b.id();
  return a.tape()->record(
      std::move(out), {a, b},
      [ia, ib, s](Tape& t, int self) {
        const Matrix& g = t.adjoint(self);
        const Matrix& va = t.value(ia);
        const Matrix& vb = t.value(ib);
        const Matrix eb = expand(vb, s);
        if (t.requires_grad(ia)) {
          t.accumulate(ia, reduce_to(g.cwiseQuotient(eb), va.rows(), va.cols()));
        }
        if (t.requires_grad(ib)) {
          const Matrix& out = t.value(self);
          t.accumulate(ib, reduce_to(-g.cwiseProduct(out).cwiseQuotient(eb), vb.rows(), vb.cols()));
        }
      },
      "div");
}

Var matmul(Var a, Var b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dimensions differ");
  Matrix out(a.rows(), b.cols());
  out.noalias() = a.value() * b.value();
  const int ia = a.id(), ib = b.id();
  return a.tape()->record(std::move(out), {a, b},
                          [ia, ib](Tape& t, int self) {
                            const Matrix& g = t.adjoint(self);
                            if (t.requires_grad(ia)) {
                              Matrix ga(g.rows(), t.value(ib).rows());
                              ga.noalias() = g * t.value(ib).transpose();
                              t.accumulate(ia, ga);
                            }
                            if (t.requires_grad(ib)) {
                              Matrix gb(t.value(ia).cols(), g.cols());
                              gb.noalias() = t.value(ia).transpose() * g;
                              t.accumulate(ib, gb);
                            }
                          },
                          "matmul");
}

Var neg(Var a) {
  return unary(a, -a.value(), "neg",
               [](const Matrix&, const Matrix&, const Matrix& g) -> Matrix { return -g; });
}

Var scale(Var a, double c) {
  return unary(a, a.value() * c, "scale",
               [c](const Matrix&, const Matrix&, const Matrix& g) -> Matrix { return g * c; });
}

Var add_scalar(Var a, double c) {
  return unary(a, a.value().array() + c, "add_scalar",
               [](const Matrix&, const Matrix&, const Matrix& g) -> Matrix { return g; });
}

Var exp(Var a) {
  return unary(a, a.value().array().exp(), "exp",
               [](const Matrix&, const Matrix& out, const Matrix& g) -> Matrix {
                 return g.cwiseProduct(out);
               });
}

Var log(Var a) {
  return unary(a, a.value().array().log(), "log",
               [](const Matrix& x, const Matrix&, const Matrix& g) -> Matrix {
                 return g.cwiseQuotient(x);
               });
}

Var tanh(Var a) {
  return unary(a, a.value().array().tanh(), "tanh",
               [](const Matrix&, const Matrix& out, const Matrix& g) -> Matrix {
                 return g.array() * (1.0 - out.array().square());
               });
}

namespace {
Matrix sigmoid_of(const Matrix& x) {
  return x.unaryExpr([](double v) {
    if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
  });
}
Matrix softplus_of(const Matrix& x) {
  return x.unaryExpr(
      [](double v) { return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v))); });
}
}  // namespace

Var sigmoid(Var a) {
  return unary(a, sigmoid_of(a.value()), "sigmoid",
               [](const Matrix&, const Matrix& out, const Matrix& g) -> Matrix {
                 return g.array() * out.array() * (1.0 - out.array());
               });
}

Var softplus(Var a) {
  return unary(a, softplus_of(a.value()), "softplus",
               [](const Matrix& x, const Matrix&, const Matrix& g) -> Matrix {
                 return g.cwiseProduct(sigmoid_of(x));
               });
}

Var log_sigmoid(Var a) {
  return unary(a, -softplus_of(-a.value()), "log_sigmoid",
               [](const Matrix& x, const Matrix&, const Matrix& g) -> Matrix {
                 return g.cwiseProduct(sigmoid_of(-x));
               });
}

Var relu(Var a) {
  return unary(a, a.value().cwiseMax(0.0), "relu",
               [](const Matrix& x, const Matrix&, const Matrix& g) -> Matrix {
                 return (x.array() > 0.0).select(g, 0.0);
               });
}

Var square(Var a) {
  return unary(a, a.value().array().square(), "square",
               [](const Matrix& x, const Matrix&, const Matrix& g) -> Matrix {
                 return 2.0 * g.cwiseProduct(x);
               });
}

Var sqrt(Var a) {
  return unary(a, a.value().array().sqrt(), "sqrt",
               [](const Matrix&, const Matrix& out, const Matrix& g) -> Matrix {
                 return 0.5 * g.cwiseQuotient(out);
               });
}

Var clip(Var a, double lo, double hi) {
  return unary(a, a.value().cwiseMax(lo).cwiseMin(hi), "clip",
               [lo, hi](const Matrix& x, const Matrix&, const Matrix& g) -> Matrix {
                 return (x.array() >= lo && x.array() <= hi).select(g, 0.0);
               });
}

Var floor(Var a) {
  return a.tape()->record(a.value().array().floor(), {a}, {}, "floor",
                          /*differentiable=*/false);
}

Var sum(Var a) {
  const int ia = a.id();
  return a.tape()->record(Matrix::Constant(1, 1, a.value().sum()), {a},
                          [ia](Tape& t, int self) {
                            const Matrix& x = t.value(ia);
                            t.accumulate(ia, Matrix::Constant(x.rows(), x.cols(),
                                                              t.adjoint(self)(0, 0)));
                          },
                          "sum");
}

Var mean(Var a) {
  const double n = static_cast<double>(a.value().size());
  return scale(sum(a), 1.0 / n);
}

Var row_sum(Var a) {
  const int ia = a.id();
  return a.tape()->record(a.value().rowwise().sum(), {a},
                          [ia](Tape& t, int self) {
                            const Matrix& x = t.value(ia);
                            t.accumulate(ia, t.adjoint(self).replicate(1, x.cols()));
                          },
                          "row_sum");
}

Var gather_cols(Var a, std::span<const Index> cols) {
  const Matrix& x = a.value();
  Matrix out(x.rows(), static_cast<Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    if (cols[j] < 0 || cols[j] >= x.cols()) throw std::out_of_range("gather_cols: bad index");
    out.col(static_cast<Index>(j)) = x.col(cols[j]);
  }
  std::vector<Index> idx(cols.begin(), cols.end());
  const int ia = a.id();
  return a.tape()->record(std::move(out), {a},
                          [ia, idx = std::move(idx)](Tape& t, int self) {
                            const Matrix& g = t.adjoint(self);
                            const Matrix& src = t.value(ia);
                            Matrix ga = Matrix::Zero(src.rows(), src.cols());
                            for (std::size_t j = 0; j < idx.size(); ++j) {
                              ga.col(idx[j]) += g.col(static_cast<Index>(j));
                            }
                            t.accumulate(ia, ga);
                          },
                          "gather_cols");
}

Var gather_rows(Var a, std::span<const Index> rows) {
  const Matrix& x = a.value();
  Matrix out(static_cast<Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= x.rows()) throw std::out_of_range("gather_rows: bad index");
    out.row(static_cast<Index>(i)) = x.row(rows[i]);
  }
  std::vector<Index> idx(rows.begin(), rows.end());
  const int ia = a.id();
  return a.tape()->record(std::move(out), {a},
                          [ia, idx = std::move(idx)](Tape& t, int self) {
                            const Matrix& g = t.adjoint(self);
                            const Matrix& src = t.value(ia);
                            Matrix ga = Matrix::Zero(src.rows(), src.cols());
                            for (std::size_t i = 0; i < idx.size(); ++i) {
                              ga.row(idx[i]) += g.row(static_cast<Index>(i));
                            }
                            t.accumulate(ia, ga);
                          },
                          "gather_rows");
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  const Index rows = parts.front().rows();
  Index total = 0;
  for (const Var& p : parts) {
    if (p.rows() != rows) throw std::invalid_argument("concat_cols: row counts differ");
    total += p.cols();
  }
  Matrix out(rows, total);
  std::vector<std::pair<int, Index>> layout;  // (node id, first column)
  Index offset = 0;
  for (const Var& p : parts) {
    out.middleCols(offset, p.cols()) = p.value();
    layout.emplace_back(p.id(), offset);
    offset += p.cols();
  }
  return parts.front().tape()->record(
      std::move(out), parts,
      [layout = std::move(layout)](Tape& t, int self) {
        const Matrix& g = t.adjoint(self);
        for (const auto& [id, first] : layout) {
          if (t.requires_grad(id)) t.accumulate(id, g.middleCols(first, t.value(id).cols()));
        }
      },
      "concat_cols");
}

Var concat_cols(std::initializer_list<Var> parts) {
  return concat_cols(std::span<const Var>(parts.begin(), parts.size()));
}

Matrix to_matrix(const DenseArray& a) {
  Index rows = 1, cols = 1;
  if (a.rank() == 1) {
    cols = static_cast<Index>(a.shape[0]);
  } else if (a.rank() == 2) {
    rows = static_cast<Index>(a.shape[0]);
    cols = static_cast<Index>(a.shape[1]);
  } else if (a.rank() > 2) {
    rows = static_cast<Index>(a.shape[0]);
    cols = static_cast<Index>(a.cols());
  }
  return Eigen::Map<const Matrix>(a.data.data(), rows, cols);
}

DenseArray to_array(const Matrix& m, const std::vector<std::size_t>& shape) {
  if (static_cast<std::size_t>(m.size()) != shape_size(shape)) {
    throw std::invalid_argument("to_array: size mismatch");
  }
  return DenseArray(shape, std::vector<double>(m.data(), m.data() + m.size()));
}

ParamVars::ParamVars(Tape& tape, const ParamSet& params, bool track)
    : tape_(&tape), params_(&params) {
  for (const auto& [name, value] : params) {
    Matrix m = to_matrix(value);
    vars_.emplace_back(name, track ? tape.variable(std::move(m)) : tape.constant(std::move(m)));
  }
}

Var ParamVars::operator[](std::string_view name) const {
  for (const auto& [key, var] : vars_) {
    if (key == name) return var;
  }
  throw std::out_of_range("ParamVars: no group '" + std::string(name) + "'");
}

ParamSet ParamVars::gradients() const {
  ParamSet out;
  for (const auto& [name, var] : vars_) {
    out.add(name, to_array(tape_->grad(var), params_->at(name).shape));
  }
  return out;
}

ValueAndGrad value_and_grad(const LossFn& loss, const ParamSet& params) {
  Tape tape;
  ParamVars vars(tape, params, /*track=*/true);
  Var out = loss(tape, vars);
  if (out.rows() != 1 || out.cols() != 1) throw std::invalid_argument("grad: loss must be 1x1");
  tape.backward(out);
  return {out.scalar(), vars.gradients()};
}

}  // namespace nbf::numkit
