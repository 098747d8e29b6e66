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

#include <vector>

#include <benchmark/benchmark.h>

#include "vbda/autodiff.hpp"
#include "vbda/models.hpp"
#include "vbda/objectives.hpp"
#include "vbda/training.hpp"

namespace {

using namespace vbda;

Tensor noise_tensor(std::size_t rows, std::size_t cols, RngStream& r) {
  std::vector<double> v(rows * cols);
  for (auto& e : v) e = r.normal();
  return Tensor({rows, cols}, std::move(v));
}

void BM_MatmulForwardBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  RngStream r(1);
  Tensor a = noise_tensor(n, n, r), b = noise_tensor(n, n, r);
  a.requires_grad = true;
  for (auto _ : state) {
    Graph g;
    Var out = sum(matmul(g.parameter(a), g.constant(b)));
    g.backward(out);
    benchmark::DoNotOptimize(a.grad->data());
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_MatmulForwardBackward)->RangeMultiplier(2)->Range(16, 128);

// One optimisation step of the full objective at the default layer sizes.
void BM_TrainingStep(benchmark::State& state) {
  const auto batch = static_cast<std::size_t>(state.range(0));
  RngStream r(2);
  Architecture arch;
  arch.input_dim = 10;
  arch.classes = 2;
  ModelParams p = init_params(arch, r);
  DomainBatch b{noise_tensor(batch, 10, r), std::vector<std::size_t>(batch, 0),
                noise_tensor(batch, 10, r)};
  for (std::size_t i = 0; i < batch; i += 2) b.y_s[i] = 1;
  std::vector<Tensor*> params = p.all();
  AdamState adam(params);
  const LossWeights w{1.0, 0.1, 0.1, 0.01};
  for (auto _ : state) {
    p.zero_grad();
    Graph g;
    g.backward(total_objective(g, p, b, w, r).total);
    adam_step(params, adam, AdamConfig{});
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * batch));
}
BENCHMARK(BM_TrainingStep)->Arg(32)->Arg(64)->Arg(128);

}  // namespace

BENCHMARK_MAIN();
