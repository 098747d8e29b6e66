// Copyright 2026 The VBDA Authors.
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

// Reverse-mode automatic differentiation on a flat tape.
//
// A Graph is an append-only list of nodes. Every node refers only to nodes
// with smaller ids, so insertion order is a topological order and backward
// is a single sweep from the root down to id 0.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "vbda/tensor.hpp"

namespace vbda {

enum class OpKind : std::uint8_t {
  kConstant,
  kVariable,
  kParameter,
  kMatMul,
  kAdd,
  kAddBias,
  kSub,
  kMul,
  kExp,
  kLog,
  kTanh,
  kRelu,
  kNeg,
  kScale,
  kShift,
  kSigmoid,
  kSoftmaxRows,
  kClamp,
  kSum,
  kMean,
  kSumRows,
  kPick,
  kGradReversal,
};

std::string_view op_name(OpKind kind);

class Graph;

/// Handle to a node of a Graph. Cheap to copy; valid while the graph lives.
struct Var {
  Graph* graph = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  double item() const { return value().item(); }
  const Shape& shape() const { return value().shape; }
};

class Graph {
 public:
  struct Node {
    OpKind kind;
    std::array<std::size_t, 2> inputs{};
    std::uint8_t arity = 0;
    bool requires_grad = false;
    double arg0 = 0.0;
    double arg1 = 0.0;
    std::vector<std::size_t> indices;
    Tensor value;
    Tensor* target = nullptr;  // bound parameter, receives leaf gradients
  };

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Tensor t);
  /// Leaf owned by the graph; its gradient lands in value(v).grad.
  Var variable(Tensor t);
  /// Leaf bound to an external tensor. The value is copied, gradients are
  /// accumulated into `t.grad`. Binding the same tensor twice returns the
  /// same node.
  Var parameter(Tensor& t);

  const Tensor& value(Var v) const { return nodes_.at(v.id).value; }
  const Node& node(std::size_t id) const { return nodes_.at(id); }
  std::size_t size() const { return nodes_.size(); }

  /// Gradient of a graph-owned variable leaf, empty before backward.
  std::span<const double> grad(Var v) const;

  /// Accumulates d(root)/d(leaf) into every requires_grad leaf. Calling it
  /// twice without zeroing the leaves doubles their gradients.
  void backward(Var root);

  // Used by the op functions below; checks acyclicity.
  Var push(OpKind kind, std::span<const Var> inputs, Tensor value,
           double arg0 = 0.0, double arg1 = 0.0,
           std::vector<std::size_t> indices = {});

 private:
  void backward_node(std::size_t id, std::vector<std::vector<double>>& grads);

  std::deque<Node> nodes_;  // stable addresses: value() references survive later pushes
  std::unordered_map<const Tensor*, std::size_t> bound_;
};

// Shape-changing ops.
Var matmul(Var a, Var b);
/// x[m×n] + bias[1×n] added to every row.
Var add_bias(Var x, Var bias);

// Elementwise. Binary ops accept identical shapes or a scalar operand.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var exp(Var x);
/// Throws DomainError on any non-positive entry.
Var log(Var x);
Var tanh(Var x);
Var relu(Var x);
Var neg(Var x);
Var scale(Var x, double factor);
Var shift(Var x, double offset);
Var sigmoid(Var x);
/// Gradient passes where lo <= x <= hi and is zero outside.
Var clamp(Var x, double lo, double hi);

/// Row-wise softmax with max subtraction.
Var softmax_rows(Var logits);

// Reductions.
Var sum(Var x);
Var mean(Var x);
/// [m×n] -> [m×1]
Var sum_rows(Var x);
/// [m×n] -> [m×1] selecting x[i, index[i]].
Var pick(Var x, std::span<const std::size_t> index);

/// Identity forward; backward multiplies the incoming gradient by -lambda.
Var gradient_reversal(Var x, double lambda);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator*(double c, Var x) { return scale(x, c); }
inline Var operator-(Var x) { return neg(x); }

}  // namespace vbda
