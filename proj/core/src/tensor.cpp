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

#include "vbda/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace vbda {

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

Tensor::Tensor(Shape s, std::vector<double> d, bool rg)
    : shape(std::move(s)), data(std::move(d)), requires_grad(rg) {
  for (auto dim : shape) {
    if (dim == 0) {
      throw DimensionError("tensor dimensions must be positive, got " +
                           shape_to_string(shape));
    }
  }
  if (shape_size(shape) != data.size()) {
    throw DimensionError("shape " + shape_to_string(shape) + " needs " +
                         std::to_string(shape_size(shape)) + " values, got " +
                         std::to_string(data.size()));
  }
}

Tensor Tensor::zeros(Shape s, bool rg) { return filled(std::move(s), 0.0, rg); }

Tensor Tensor::filled(Shape s, double value, bool rg) {
  const auto n = shape_size(s);
  return Tensor(std::move(s), std::vector<double>(n, value), rg);
}

Tensor Tensor::scalar(double value, bool rg) { return Tensor({1}, {value}, rg); }

Tensor Tensor::matrix(std::size_t rows, std::size_t cols,
                      std::vector<double> d, bool rg) {
  return Tensor({rows, cols}, std::move(d), rg);
}

std::size_t Tensor::rows() const {
  if (shape.size() == 2) return shape[0];
  if (shape.size() == 1) return 1;
  throw DimensionError("expected a matrix, got " + shape_to_string(shape));
}

std::size_t Tensor::cols() const {
  if (shape.size() == 2) return shape[1];
  if (shape.size() == 1) return shape[0];
  throw DimensionError("expected a matrix, got " + shape_to_string(shape));
}

double Tensor::item() const {
  if (!is_scalar()) {
    throw ContractError("item() on non-scalar tensor " + shape_to_string(shape));
  }
  return data[0];
}

std::vector<double>& Tensor::ensure_grad() {
  if (!grad || grad->size() != data.size()) grad.emplace(data.size(), 0.0);
  return *grad;
}

void Tensor::zero_grad() {
  if (grad) std::fill(grad->begin(), grad->end(), 0.0);
}

bool Tensor::all_finite() const {
  return std::all_of(data.begin(), data.end(),
                     [](double v) { return std::isfinite(v); });
}

bool operator==(const Tensor& a, const Tensor& b) {
  return a.shape == b.shape && a.data == b.data;
}

}  // namespace vbda
