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

#include "vbda/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace vbda {

namespace {

Graph& graph_of(Var a) {
  if (a.graph == nullptr) throw ContractError("Var is not attached to a graph");
  return *a.graph;
}

Graph& common_graph(Var a, Var b) {
  if (a.graph != b.graph) {
    throw ContractError("operands belong to different graphs");
  }
  return graph_of(a);
}

void require_matrix(const Tensor& t, std::string_view what) {
  if (t.rank() != 2) {
    throw DimensionError(std::string(what) + " expects a matrix, got " +
                         shape_to_string(t.shape));
  }
}

// Binary elementwise ops broadcast only a scalar operand.
Shape binary_shape(const Tensor& a, const Tensor& b, std::string_view what) {
  if (a.shape == b.shape) return a.shape;
  if (b.is_scalar()) return a.shape;
  if (a.is_scalar()) return b.shape;
  throw DimensionError(std::string(what) + ": shape mismatch " +
                       shape_to_string(a.shape) + " vs " +
                       shape_to_string(b.shape));
}

template <typename F>
Var binary(OpKind kind, Var a, Var b, std::string_view what, F f) {
  Graph& g = common_graph(a, b);
  const Tensor& ta = a.value();
  const Tensor& tb = b.value();
  Shape shape = binary_shape(ta, tb, what);
  const std::size_t n = shape_size(shape);
  const bool sa = ta.size() == 1 && n != 1;
  const bool sb = tb.size() == 1 && n != 1;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = f(ta.data[sa ? 0 : i], tb.data[sb ? 0 : i]);
  }
  const Var in[] = {a, b};
  return g.push(kind, in, Tensor(std::move(shape), std::move(out)));
}

template <typename F>
Var unary(OpKind kind, Var x, F f, double arg0 = 0.0, double arg1 = 0.0) {
  Graph& g = graph_of(x);
  const Tensor& t = x.value();
  std::vector<double> out(t.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(t.data[i]);
  const Var in[] = {x};
  return g.push(kind, in, Tensor(t.shape, std::move(out)), arg0, arg1);
}

double stable_sigmoid(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

}  // namespace

std::string_view op_name(OpKind kind) {
  switch (kind) {
    case OpKind::kConstant: return "constant";
    case OpKind::kVariable: return "variable";
    case OpKind::kParameter: return "parameter";
    case OpKind::kMatMul: return "matmul";
    case OpKind::kAdd: return "add";
    case OpKind::kAddBias: return "add_bias";
    case OpKind::kSub: return "sub";
    case OpKind::kMul: return "mul";
    case OpKind::kExp: return "exp";
    case OpKind::kLog: return "log";
    case OpKind::kTanh: return "tanh";
    case OpKind::kRelu: return "relu";
    case OpKind::kNeg: return "neg";
    case OpKind::kScale: return "scale";
    case OpKind::kShift: return "shift";
    case OpKind::kSigmoid: return "sigmoid";
    case OpKind::kSoftmaxRows: return "softmax_rows";
    case OpKind::kClamp: return "clamp";
    case OpKind::kSum: return "sum";
    case OpKind::kMean: return "mean";
    case OpKind::kSumRows: return "sum_rows";
    case OpKind::kPick: return "pick";
    case OpKind::kGradReversal: return "gradient_reversal";
  }
  return "unknown";
}

const Tensor& Var::value() const { return graph_of(*this).value(*this); }

Var Graph::constant(Tensor t) {
  t.requires_grad = false;
  return push(OpKind::kConstant, {}, std::move(t));
}

Var Graph::variable(Tensor t) {
  t.requires_grad = true;
  return push(OpKind::kVariable, {}, std::move(t));
}

Var Graph::parameter(Tensor& t) {
  if (auto it = bound_.find(&t); it != bound_.end()) return Var{this, it->second};
  Tensor copy(t.shape, t.data, t.requires_grad);
  Var v = push(OpKind::kParameter, {}, std::move(copy));
  nodes_[v.id].target = &t;
  bound_.emplace(&t, v.id);
  return v;
}

std::span<const double> Graph::grad(Var v) const {
  const auto& g = nodes_.at(v.id).value.grad;
  if (!g) return {};
  return *g;
}

Var Graph::push(OpKind kind, std::span<const Var> inputs, Tensor value,
                double arg0, double arg1, std::vector<std::size_t> indices) {
  const std::size_t id = nodes_.size();
  Node node;
  node.kind = kind;
  node.arity = static_cast<std::uint8_t>(inputs.size());
  node.arg0 = arg0;
  node.arg1 = arg1;
  node.indices = std::move(indices);
  node.requires_grad = value.requires_grad;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i].graph != this || inputs[i].id >= id) {
      throw ContractError("graph input id must precede the node it feeds");
    }
    node.inputs[i] = inputs[i].id;
    node.requires_grad = node.requires_grad || nodes_[inputs[i].id].requires_grad;
  }
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return Var{this, id};
}

void Graph::backward(Var root) {
  if (root.graph != this || root.id >= nodes_.size()) {
    throw ContractError("backward root does not belong to this graph");
  }
  if (!nodes_[root.id].value.is_scalar()) {
    throw ContractError("backward root must be a scalar, got " +
                        shape_to_string(nodes_[root.id].value.shape));
  }
  std::vector<std::vector<double>> grads(root.id + 1);
  grads[root.id].assign(1, 1.0);
  for (std::size_t id = root.id + 1; id-- > 0;) {
    if (grads[id].empty() || !nodes_[id].requires_grad) continue;
    backward_node(id, grads);
    grads[id].clear();
    grads[id].shrink_to_fit();
  }
}

void Graph::backward_node(std::size_t id,
                          std::vector<std::vector<double>>& grads) {
  Node& node = nodes_[id];
  const std::vector<double>& dy = grads[id];

  auto sink = [&](std::size_t k) -> std::vector<double>* {
    const std::size_t in = node.inputs[k];
    if (!nodes_[in].requires_grad) return nullptr;
    auto& g = grads[in];
    if (g.empty()) g.assign(nodes_[in].value.size(), 0.0);
    return &g;
  };

  switch (node.kind) {
    case OpKind::kConstant:
      return;
    case OpKind::kVariable: {
      auto& g = node.value.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += dy[i];
      return;
    }
    case OpKind::kParameter: {
      auto& g = node.target->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += dy[i];
      return;
    }
    case OpKind::kMatMul: {
      const Tensor& a = nodes_[node.inputs[0]].value;
      const Tensor& b = nodes_[node.inputs[1]].value;
      const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
      if (auto* da = sink(0)) {
        for (std::size_t i = 0; i < m; ++i) {
          const double* dyr = dy.data() + i * n;
          for (std::size_t p = 0; p < k; ++p) {
            const double* br = b.data.data() + p * n;
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += dyr[j] * br[j];
            (*da)[i * k + p] += acc;
          }
        }
      }
      if (auto* db = sink(1)) {
        for (std::size_t i = 0; i < m; ++i) {
          const double* dyr = dy.data() + i * n;
          for (std::size_t p = 0; p < k; ++p) {
            const double av = a.data[i * k + p];
            double* dbr = db->data() + p * n;
            for (std::size_t j = 0; j < n; ++j) dbr[j] += av * dyr[j];
          }
        }
      }
      return;
    }
    case OpKind::kAdd:
    case OpKind::kSub:
    case OpKind::kMul: {
      const Tensor& a = nodes_[node.inputs[0]].value;
      const Tensor& b = nodes_[node.inputs[1]].value;
      const std::size_t n = dy.size();
      const bool sa = a.size() == 1 && n != 1;
      const bool sb = b.size() == 1 && n != 1;
      if (auto* da = sink(0)) {
        for (std::size_t i = 0; i < n; ++i) {
          const double local =
              node.kind == OpKind::kMul ? b.data[sb ? 0 : i] : 1.0;
          (*da)[sa ? 0 : i] += dy[i] * local;
        }
      }
      if (auto* db = sink(1)) {
        for (std::size_t i = 0; i < n; ++i) {
          double local = 1.0;
          if (node.kind == OpKind::kSub) local = -1.0;
          if (node.kind == OpKind::kMul) local = a.data[sa ? 0 : i];
          (*db)[sb ? 0 : i] += dy[i] * local;
        }
      }
      return;
    }
    case OpKind::kAddBias: {
      const std::size_t n = node.value.cols();
      if (auto* dx = sink(0)) {
        for (std::size_t i = 0; i < dy.size(); ++i) (*dx)[i] += dy[i];
      }
      if (auto* db = sink(1)) {
        for (std::size_t i = 0; i < dy.size(); ++i) (*db)[i % n] += dy[i];
      }
      return;
    }
    case OpKind::kExp:
    case OpKind::kLog:
    case OpKind::kTanh:
    case OpKind::kRelu:
    case OpKind::kNeg:
    case OpKind::kScale:
    case OpKind::kShift:
    case OpKind::kSigmoid:
    case OpKind::kClamp:
    case OpKind::kGradReversal: {
      auto* dx = sink(0);
      if (!dx) return;
      const Tensor& x = nodes_[node.inputs[0]].value;
      const Tensor& y = node.value;
      for (std::size_t i = 0; i < dy.size(); ++i) {
        double local = 0.0;
        switch (node.kind) {
          case OpKind::kExp: local = y.data[i]; break;
          case OpKind::kLog: local = 1.0 / x.data[i]; break;
          case OpKind::kTanh: local = 1.0 - y.data[i] * y.data[i]; break;
          case OpKind::kRelu: local = x.data[i] > 0.0 ? 1.0 : 0.0; break;
          case OpKind::kNeg: local = -1.0; break;
          case OpKind::kScale: local = node.arg0; break;
          case OpKind::kShift: local = 1.0; break;
          case OpKind::kSigmoid: local = y.data[i] * (1.0 - y.data[i]); break;
          case OpKind::kClamp:
            local = (x.data[i] >= node.arg0 && x.data[i] <= node.arg1) ? 1.0 : 0.0;
            break;
          case OpKind::kGradReversal: local = -node.arg0; break;
          default: break;
        }
        (*dx)[i] += dy[i] * local;
      }
      return;
    }
    case OpKind::kSoftmaxRows: {
      auto* dx = sink(0);
      if (!dx) return;
      const Tensor& y = node.value;
      const std::size_t m = y.rows(), n = y.cols();
      for (std::size_t i = 0; i < m; ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < n; ++j) dot += dy[i * n + j] * y.data[i * n + j];
        for (std::size_t j = 0; j < n; ++j) {
          (*dx)[i * n + j] += y.data[i * n + j] * (dy[i * n + j] - dot);
        }
      }
      return;
    }
    case OpKind::kSum:
    case OpKind::kMean: {
      auto* dx = sink(0);
      if (!dx) return;
      const double factor =
          node.kind == OpKind::kMean ? 1.0 / static_cast<double>(dx->size()) : 1.0;
      for (auto& v : *dx) v += dy[0] * factor;
      return;
    }
    case OpKind::kSumRows: {
      auto* dx = sink(0);
      if (!dx) return;
      const Tensor& x = nodes_[node.inputs[0]].value;
      const std::size_t n = x.cols();
      for (std::size_t i = 0; i < x.size(); ++i) (*dx)[i] += dy[i / n];
      return;
    }
    case OpKind::kPick: {
      auto* dx = sink(0);
      if (!dx) return;
      const std::size_t n = nodes_[node.inputs[0]].value.cols();
      for (std::size_t i = 0; i < node.indices.size(); ++i) {
        (*dx)[i * n + node.indices[i]] += dy[i];
      }
      return;
    }
  }
}

Var matmul(Var a, Var b) {
  Graph& g = common_graph(a, b);
  const Tensor& ta = a.value();
  const Tensor& tb = b.value();
  require_matrix(ta, "matmul");
  require_matrix(tb, "matmul");
  if (ta.cols() != tb.rows()) {
    throw DimensionError("matmul: inner dimensions disagree, " +
                         shape_to_string(ta.shape) + " x " +
                         shape_to_string(tb.shape));
  }
  const std::size_t m = ta.rows(), k = ta.cols(), n = tb.cols();
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double* row = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ta.data[i * k + p];
      const double* br = tb.data.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += av * br[j];
    }
  }
  const Var in[] = {a, b};
  return g.push(OpKind::kMatMul, in, Tensor({m, n}, std::move(out)));
}

Var add_bias(Var x, Var bias) {
  Graph& g = common_graph(x, bias);
  const Tensor& tx = x.value();
  const Tensor& tb = bias.value();
  require_matrix(tx, "add_bias");
  if (tb.size() != tx.cols()) {
    throw DimensionError("add_bias: bias " + shape_to_string(tb.shape) +
                         " does not match " + shape_to_string(tx.shape));
  }
  std::vector<double> out(tx.data);
  const std::size_t n = tx.cols();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += tb.data[i % n];
  const Var in[] = {x, bias};
  return g.push(OpKind::kAddBias, in, Tensor(tx.shape, std::move(out)));
}

Var add(Var a, Var b) {
  return binary(OpKind::kAdd, a, b, "add", [](double u, double v) { return u + v; });
}

Var sub(Var a, Var b) {
  return binary(OpKind::kSub, a, b, "sub", [](double u, double v) { return u - v; });
}

Var mul(Var a, Var b) {
  return binary(OpKind::kMul, a, b, "mul", [](double u, double v) { return u * v; });
}

Var exp(Var x) {
  return unary(OpKind::kExp, x, [](double v) { return std::exp(v); });
}

Var log(Var x) {
  const Tensor& t = x.value();
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!(t.data[i] > 0.0)) {
      std::ostringstream os;
      os << "log: entry " << i << " is non-positive (" << t.data[i] << ")";
      throw DomainError(os.str());
    }
  }
  return unary(OpKind::kLog, x, [](double v) { return std::log(v); });
}

Var tanh(Var x) {
  return unary(OpKind::kTanh, x, [](double v) { return std::tanh(v); });
}

Var relu(Var x) {
  return unary(OpKind::kRelu, x, [](double v) { return v > 0.0 ? v : 0.0; });
}

Var neg(Var x) {
  return unary(OpKind::kNeg, x, [](double v) { return -v; });
}

Var scale(Var x, double factor) {
  return unary(OpKind::kScale, x, [factor](double v) { return factor * v; }, factor);
}

Var shift(Var x, double offset) {
  return unary(OpKind::kShift, x, [offset](double v) { return v + offset; }, offset);
}

Var sigmoid(Var x) { return unary(OpKind::kSigmoid, x, stable_sigmoid); }

Var clamp(Var x, double lo, double hi) {
  if (lo > hi) throw ContractError("clamp: lo > hi");
  return unary(
      OpKind::kClamp, x, [lo, hi](double v) { return std::clamp(v, lo, hi); },
      lo, hi);
}

Var softmax_rows(Var logits) {
  Graph& g = graph_of(logits);
  const Tensor& t = logits.value();
  require_matrix(t, "softmax_rows");
  if (!t.all_finite()) throw DomainError("softmax_rows: non-finite logits");
  const std::size_t m = t.rows(), n = t.cols();
  std::vector<double> out(t.size());
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = t.data.data() + i * n;
    const double mx = *std::max_element(row, row + n);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      out[i * n + j] = std::exp(row[j] - mx);
      z += out[i * n + j];
    }
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] /= z;
  }
  const Var in[] = {logits};
  return g.push(OpKind::kSoftmaxRows, in, Tensor(t.shape, std::move(out)));
}

Var sum(Var x) {
  Graph& g = graph_of(x);
  double s = 0.0;
  for (double v : x.value().data) s += v;
  const Var in[] = {x};
  return g.push(OpKind::kSum, in, Tensor::scalar(s));
}

Var mean(Var x) {
  Graph& g = graph_of(x);
  const Tensor& t = x.value();
  double s = 0.0;
  for (double v : t.data) s += v;
  const Var in[] = {x};
  return g.push(OpKind::kMean, in,
                Tensor::scalar(s / static_cast<double>(t.size())));
}

Var sum_rows(Var x) {
  Graph& g = graph_of(x);
  const Tensor& t = x.value();
  require_matrix(t, "sum_rows");
  const std::size_t m = t.rows(), n = t.cols();
  std::vector<double> out(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[i] += t.data[i * n + j];
  }
  const Var in[] = {x};
  return g.push(OpKind::kSumRows, in, Tensor({m, 1}, std::move(out)));
}

Var pick(Var x, std::span<const std::size_t> index) {
  Graph& g = graph_of(x);
  const Tensor& t = x.value();
  require_matrix(t, "pick");
  const std::size_t m = t.rows(), n = t.cols();
  if (index.size() != m) {
    throw DimensionError("pick: " + std::to_string(index.size()) +
                         " indices for " + shape_to_string(t.shape));
  }
  std::vector<double> out(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (index[i] >= n) {
      throw ContractError("pick: index " + std::to_string(index[i]) +
                          " out of range for width " + std::to_string(n));
    }
    out[i] = t.data[i * n + index[i]];
  }
  const Var in[] = {x};
  return g.push(OpKind::kPick, in, Tensor({m, 1}, std::move(out)), 0.0, 0.0,
                std::vector<std::size_t>(index.begin(), index.end()));
}

Var gradient_reversal(Var x, double lambda) {
  if (!(lambda >= 0.0)) {
    throw ContractError("gradient_reversal: lambda must be non-negative");
  }
  return unary(OpKind::kGradReversal, x, [](double v) { return v; }, lambda);
}

}  // namespace vbda
