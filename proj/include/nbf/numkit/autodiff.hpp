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

#pragma once

#include <deque>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "nbf/numkit/dense_array.hpp"

namespace nbf::numkit {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Index = Eigen::Index;

/// Raised when a gradient has to flow through a primitive that has no
/// derivative (e.g. floor).
class NonDifferentiableError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid as long as its tape lives.
class Var {
 public:
  Var() = default;

  [[nodiscard]] const Matrix& value() const;
  [[nodiscard]] Index rows() const { return value().rows(); }
  [[nodiscard]] Index cols() const { return value().cols(); }
  [[nodiscard]] double scalar() const;
  [[nodiscard]] Tape* tape() const noexcept { return tape_; }
  [[nodiscard]] int id() const noexcept { return id_; }
  [[nodiscard]] bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  int id_ = -1;
};

/// Reverse-mode recording of matrix-valued computations.
///
/// Every primitive appends a node holding its value and a closure that
/// propagates the node's adjoint into its parents. Nodes are stored in a
/// deque so references to values stay valid while the tape grows.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, int self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  /// Leaf whose gradient is tracked.
  Var variable(Matrix value);
  /// Appends a derived node. `backward` may be empty when no parent needs a
  /// gradient. A non-differentiable node only raises if a gradient actually
  /// reaches it during backward().
  Var record(Matrix value, std::initializer_list<Var> parents, BackwardFn backward,
             std::string_view op, bool differentiable = true);
  Var record(Matrix value, std::span<const Var> parents, BackwardFn backward, std::string_view op,
             bool differentiable = true);

  /// Seeds d(root)/d(root) = 1 for a 1x1 root and propagates to every node.
  void backward(Var root);

  [[nodiscard]] const Matrix& value(int id) const { return nodes_[id].value; }
  [[nodiscard]] bool requires_grad(int id) const { return nodes_[id].requires_grad; }
  /// Adjoint of a node; a zero matrix if no gradient reached it.
  [[nodiscard]] Matrix grad(Var v) const;
  /// Adjoint of the node being processed in a backward closure.
  [[nodiscard]] const Matrix& adjoint(int id) const { return nodes_[id].grad; }

  /// Adds `g` into the adjoint of node `id` if it tracks gradients.
  template <typename Expr>
  void accumulate(int id, const Expr& g) {
    Node& n = nodes_[id];
    if (!n.requires_grad) return;
    if (!n.has_grad) {
      n.grad = g;
      n.has_grad = true;
    } else {
      n.grad += g;
    }
  }

  [[nodiscard]] std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool has_grad = false;
    bool requires_grad = false;
    bool differentiable = true;
    BackwardFn backward;
    std::string_view op;
  };

  std::deque<Node> nodes_;
};

// ---------------------------------------------------------------------------
// Primitives. Binary element-wise ops broadcast a 1xC row, an Rx1 column or a
// 1x1 scalar against the other operand.

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
Var matmul(Var a, Var b);

Var neg(Var a);
Var scale(Var a, double c);
Var add_scalar(Var a, double c);
Var exp(Var a);
Var log(Var a);
Var tanh(Var a);
Var sigmoid(Var a);
/// log(1 + e^a), computed stably.
Var softplus(Var a);
/// log(sigmoid(a)), computed stably.
Var log_sigmoid(Var a);
Var relu(Var a);
Var square(Var a);
Var sqrt(Var a);
/// Clamps entries to [lo, hi]; the gradient is zero where clamping happened.
Var clip(Var a, double lo, double hi);
/// Non-differentiable.
Var floor(Var a);

/// Sum of all entries as a 1x1.
Var sum(Var a);
/// Mean of all entries as a 1x1.
Var mean(Var a);
/// Row sums as an Rx1 column.
Var row_sum(Var a);

Var gather_cols(Var a, std::span<const Index> cols);
/// Output row i is input row idx[i]; repeated indices accumulate gradients.
Var gather_rows(Var a, std::span<const Index> rows);
Var concat_cols(std::span<const Var> parts);
Var concat_cols(std::initializer_list<Var> parts);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator/(Var a, Var b) { return div(a, b); }
inline Var operator-(Var a) { return neg(a); }
inline Var operator+(Var a, double c) { return add_scalar(a, c); }
inline Var operator+(double c, Var a) { return add_scalar(a, c); }
inline Var operator-(Var a, double c) { return add_scalar(a, -c); }
inline Var operator-(double c, Var a) { return add_scalar(neg(a), c); }
inline Var operator*(Var a, double c) { return scale(a, c); }
inline Var operator*(double c, Var a) { return scale(a, c); }

// ---------------------------------------------------------------------------

/// Matrix view of a DenseArray: rank 0 -> 1x1, rank 1 -> 1xN, rank 2 -> RxC.
[[nodiscard]] Matrix to_matrix(const DenseArray& a);
[[nodiscard]] DenseArray to_array(const Matrix& m, const std::vector<std::size_t>& shape);

/// A ParamSet bound onto a tape, either as tracked variables or constants.
class ParamVars {
 public:
  ParamVars(Tape& tape, const ParamSet& params, bool track);

  [[nodiscard]] Var operator[](std::string_view name) const;
  [[nodiscard]] const ParamSet& params() const noexcept { return *params_; }
  [[nodiscard]] Tape& tape() const noexcept { return *tape_; }
  /// Gradients of every group after Tape::backward (zeros where unreached).
  [[nodiscard]] ParamSet gradients() const;

 private:
  Tape* tape_;
  const ParamSet* params_;
  std::vector<std::pair<std::string, Var>> vars_;
};

using LossFn = std::function<Var(Tape&, const ParamVars&)>;

struct ValueAndGrad {
  double value = 0.0;
  ParamSet grads;
};

/// Exact reverse-mode gradient of a scalar loss built from tape primitives.
ValueAndGrad value_and_grad(const LossFn& loss, const ParamSet& params);
inline ParamSet grad(const LossFn& loss, const ParamSet& params) {
  return value_and_grad(loss, params).grads;
}

}  // namespace nbf::numkit
