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

#include "vbda/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace vbda {

namespace {

double evaluate(const ScalarFn& f) {
  Graph g;
  return f(g).item();
}

}  // namespace

GradCheckReport finite_difference_check(const ScalarFn& f,
                                        std::span<Tensor* const> params,
                                        double epsilon, double tolerance) {
  if (!(epsilon > 0.0)) throw ContractError("finite_difference_check: epsilon must be > 0");

  for (Tensor* p : params) {
    p->requires_grad = true;
    p->ensure_grad();
    p->zero_grad();
  }
  double base = 0.0;
  {
    Graph g;
    Var root = f(g);
    base = root.item();
    g.backward(root);
  }
  const double again = evaluate(f);
  if (base != again) {
    throw ContractError(
        "finite_difference_check: function is not deterministic; freeze its "
        "random stream");
  }

  GradCheckReport report;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = *params[k];
    const std::vector<double> analytic = *p.grad;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double saved = p.data[i];
      p.data[i] = saved + epsilon;
      const double up = evaluate(f);
      p.data[i] = saved - epsilon;
      const double down = evaluate(f);
      p.data[i] = saved;
      const double numeric = (up - down) / (2.0 * epsilon);
      const double denom =
          std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
      const double rel = std::abs(analytic[i] - numeric) / denom;
      ++report.coordinates;
      if (rel > report.max_rel_err || std::isnan(rel)) {
        report.max_rel_err = std::isnan(rel) ? INFINITY : rel;
        report.worst_param = k;
        report.worst_index = i;
      }
    }
  }
  report.pass = report.max_rel_err <= tolerance;
  return report;
}

}  // namespace vbda
