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

#pragma once

#include <cstddef>
#include <functional>
#include <span>

#include "vbda/autodiff.hpp"

namespace vbda {

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::size_t worst_param = 0;
  std::size_t worst_index = 0;
  std::size_t coordinates = 0;
  bool pass = false;
};

/// Builds a scalar on a fresh graph. It must bind the checked tensors with
/// Graph::parameter and be deterministic (any randomness frozen).
using ScalarFn = std::function<Var(Graph&)>;

/// Compares the backward gradient of `f` with central differences
/// (f(p + eps e_i) - f(p - eps e_i)) / 2 eps over every coordinate of every
/// tensor in `params`. The relative error of a coordinate is
/// |a - n| / max(|a|, |n|, 1e-8).
///
/// Existing gradients on `params` are overwritten. Throws ContractError if
/// two evaluations at the same point disagree.
GradCheckReport finite_difference_check(const ScalarFn& f,
                                        std::span<Tensor* const> params,
                                        double epsilon = 1e-5,
                                        double tolerance = 1e-4);

}  // namespace vbda
