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

#include <cmath>
#include <vector>

#include "doctest.h"
#include "test_util.hpp"
#include "vbda/experiment.hpp"
#include "vbda/training.hpp"

using namespace vbda;

namespace {

TrainConfig quick_config(std::size_t steps) {
  TrainConfig c;
  c.steps = steps;
  c.eval_every = 10;
  c.batch_source = 32;
  c.batch_target = 32;
  c.hidden = 16;
  c.latent_dim = 4;
  c.classifier_hidden = 16;
  c.discriminator_hidden = 16;
  return c;
}

DomainPair small_task(std::size_t n = 200) {
  SyntheticSpec s;
  s.n = n;
  return generate_task(s);
}

bool same_metrics(const std::vector<MetricsRecord>& a, const std::vector<MetricsRecord>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const LossBreakdown &x = a[i].losses, &y = b[i].losses;
    if (a[i].step != b[i].step || x.l_cls != y.l_cls || x.l_adv != y.l_adv ||
        x.l_ce != y.l_ce || x.kl_s != y.kl_s || x.kl_t != y.kl_t || x.total != y.total ||
        x.i_l_s != y.i_l_s || a[i].i_l_t_oracle != b[i].i_l_t_oracle ||
        a[i].src_acc != b[i].src_acc || a[i].tgt_acc != b[i].tgt_acc ||
        a[i].lambda_d != b[i].lambda_d) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("train config validation") {
  TrainConfig c;
  CHECK_NOTHROW(c.validate());
  c.lambda_s = -0.1;
  CHECK_THROWS_AS(c.validate(), ContractError);
  c = TrainConfig{};
  c.lr = 0.0;
  CHECK_THROWS_AS(c.validate(), ContractError);
  c = TrainConfig{};
  c.warmup = 1.5;
  CHECK_THROWS_AS(c.validate(), ContractError);
  c = TrainConfig{};
  c.eval_every = 0;
  CHECK_THROWS_AS(c.validate(), ContractError);
  c = TrainConfig{};
  c.lambda_d = std::nan("");
  CHECK_THROWS_AS(c.validate(), ContractError);
}

TEST_CASE("lambda_d warm-up ramps linearly then holds") {
  TrainConfig c;
  c.lambda_d = 0.8;
  c.steps = 1000;
  c.warmup = 0.2;
  CHECK(c.lambda_d_at(0) == 0.0);
  CHECK(c.lambda_d_at(100) == doctest::Approx(0.4));
  CHECK(c.lambda_d_at(200) == 0.8);
  CHECK(c.lambda_d_at(999) == 0.8);
  c.warmup = 0.0;
  CHECK(c.lambda_d_at(0) == 0.8);
  const LossWeights w = c.weights_at(5);
  CHECK(w.lambda_d == 0.8);
}

TEST_CASE("adam leaves parameters alone under a zero gradient") {
  Tensor p = Tensor::matrix(1, 3, {0.5, -1.0, 2.0}, true);
  const auto before = p.data;
  std::vector<Tensor*> params{&p};
  AdamState s(params);
  for (int i = 0; i < 50; ++i) {
    p.ensure_grad();
    p.zero_grad();
    adam_step(params, s, AdamConfig{});
  }
  CHECK(p.data == before);
  Tensor no_grad = Tensor::matrix(1, 2, {1.0, 2.0}, true);
  std::vector<Tensor*> bare{&no_grad};
  AdamState t(bare);
  adam_step(bare, t, AdamConfig{});
  CHECK(no_grad.data == std::vector<double>{1.0, 2.0});
}

TEST_CASE("adam first step moves each coordinate by about lr") {
  Tensor p = Tensor::matrix(1, 3, {0.0, 0.0, 0.0}, true);
  p.ensure_grad() = {3.0, -0.2, 1e-3};
  std::vector<Tensor*> params{&p};
  AdamState s(params);
  const AdamConfig c{0.01, 0.9, 0.999, 1e-8};
  adam_step(params, s, c);
  CHECK(p.data[0] == doctest::Approx(-0.01).epsilon(1e-6));
  CHECK(p.data[1] == doctest::Approx(0.01).epsilon(1e-6));
  CHECK(p.data[2] == doctest::Approx(-0.01).epsilon(1e-4));
}

TEST_CASE("adam matches a scalar reimplementation over ten steps") {
  RngStream r(40);
  Tensor p = Tensor::matrix(1, 4, {0.1, -0.3, 0.7, 1.2}, true);
  std::vector<double> oracle = p.data, m(4, 0.0), v(4, 0.0);
  std::vector<Tensor*> params{&p};
  AdamState s(params);
  const AdamConfig c{0.05, 0.8, 0.95, 1e-6};
  for (int t = 1; t <= 10; ++t) {
    std::vector<double> g(4);
    for (auto& e : g) e = r.normal();
    p.ensure_grad() = g;
    adam_step(params, s, c);
    for (int i = 0; i < 4; ++i) {
      m[i] = c.beta1 * m[i] + (1 - c.beta1) * g[i];
      v[i] = c.beta2 * v[i] + (1 - c.beta2) * g[i] * g[i];
      const double mh = m[i] / (1 - std::pow(c.beta1, t));
      const double vh = v[i] / (1 - std::pow(c.beta2, t));
      oracle[i] -= c.lr * mh / (std::sqrt(vh) + c.eps);
    }
  }
  for (int i = 0; i < 4; ++i) CHECK(std::abs(p.data[i] - oracle[i]) <= 1e-12);
}

TEST_CASE("adam rejects mismatched state") {
  Tensor a = Tensor::zeros({1, 3}, true), b = Tensor::zeros({1, 2}, true);
  std::vector<Tensor*> one{&a}, two{&a, &b}, other{&b};
  AdamState s(one);
  CHECK_THROWS_AS(adam_step(two, s, AdamConfig{}), ContractError);
  CHECK_THROWS_AS(adam_step(other, s, AdamConfig{}), ContractError);
}

TEST_CASE("evaluate examples") {
  Architecture arch;
  arch.input_dim = 3;
  arch.hidden = 4;
  arch.latent_dim = 2;
  arch.classifier_hidden = 4;
  arch.discriminator_hidden = 4;
  RngStream r(41);
  ModelParams p = init_params(arch, r);
  for (auto& v : p.cls_out.weight.data) v = 0.0;
  p.cls_out.bias.data = {5.0, 0.0};  // always predicts class 0

  Dataset d;
  d.classes = 2;
  d.x = vbda::testing::random_tensor(6, 3, r, 1.0, false);
  d.labels = {0, 0, 0, 0, 0, 0};
  CHECK(evaluate(p, d, r, true) == 1.0);
  d.labels = {0, 1, 0, 1, 0, 1};
  CHECK(evaluate(p, d, r, true) == 0.5);

  // Posterior-mean evaluation is deterministic.
  ModelParams q = init_params(arch, r);
  RngStream r1(1), r2(2);
  CHECK(evaluate(q, d, r1, true) == evaluate(q, d, r2, true));
  const Tensor a = predict_proba(q, d.x, r1, true), b = predict_proba(q, d.x, r2, true);
  CHECK(a == b);
}

TEST_CASE("zero steps return the initial parameters and no metrics") {
  const DomainPair data = small_task();
  TrainConfig c = quick_config(0);
  c.seed = 5;
  TrainResult res = train(c, data);
  CHECK(res.metrics.empty());
  RngStream init = RngStream(5).derive("init");
  ModelParams fresh = init_params(c.architecture(data.source.dim(), data.source.classes), init);
  auto a = res.params.named();
  auto b = fresh.named();
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].second->data == b[i].second->data);
}

TEST_CASE("same seed gives identical metric streams") {
  const DomainPair data = small_task();
  TrainConfig c = quick_config(30);
  c.lambda_d = 0.5;
  c.lambda_ce = 0.1;
  c.lambda_s = 0.1;
  c.lambda_t = 0.01;
  c.seed = 3;
  const TrainResult a = train(c, data);
  const TrainResult b = train(c, data);
  CHECK(same_metrics(a.metrics, b.metrics));
  c.seed = 4;
  CHECK_FALSE(same_metrics(a.metrics, train(c, data).metrics));
}

TEST_CASE("metrics are recorded on schedule with sane values") {
  const DomainPair data = small_task();
  TrainConfig c = quick_config(45);
  c.lambda_d = 0.6;
  c.warmup = 0.5;  // boundary at step 22.5
  c.eval_every = 15;
  const TrainResult res = train(c, data);
  std::vector<std::size_t> steps;
  for (const auto& m : res.metrics) {
    steps.push_back(m.step);
    CHECK(m.src_acc >= 0.0);
    CHECK(m.src_acc <= 1.0);
    CHECK(m.tgt_acc >= 0.0);
    CHECK(m.tgt_acc <= 1.0);
    CHECK(m.losses.all_finite());
    CHECK(m.lambda_d == c.lambda_d_at(m.step));
  }
  CHECK(steps == std::vector<std::size_t>{0, 15, 30, 45});
  CHECK(res.metrics.front().lambda_d == 0.0);
  CHECK(res.metrics.back().lambda_d == 0.6);
}

TEST_CASE("the final step is always recorded") {
  const DomainPair data = small_task();
  TrainConfig c = quick_config(25);
  c.eval_every = 10;
  std::vector<std::size_t> steps;
  for (const auto& m : train(c, data).metrics) steps.push_back(m.step);
  CHECK(steps == std::vector<std::size_t>{0, 10, 20, 25});
}

TEST_CASE("divergence aborts with a diagnostic") {
  const DomainPair data = small_task();
  TrainConfig c = quick_config(20);
  c.lambda_s = 0.1;
  c.lr = 1e160;
  try {
    train(c, data);
    FAIL("expected TrainingDiverged");
  } catch (const TrainingDiverged& e) {
    CHECK(e.step() >= 1);
    CHECK(std::string(e.what()).find("step") != std::string::npos);
  }
}

TEST_CASE("train rejects mismatched domains") {
  DomainPair data = small_task();
  Dataset other;
  other.classes = 2;
  other.x = Tensor::zeros({5, 3});
  other.labels = {0, 1, 0, 1, 0};
  data.target = TargetDomain(other);
  CHECK_THROWS_AS(train(quick_config(5), data), DimensionError);
}

TEST_CASE("source-only training fits the nuisance source") {
  const ExperimentSpec spec = default_spec(Method::kSourceOnly, Task::kNuisance);
  const DomainPair data = load_task_data(spec);
  TrainConfig c = spec.train;
  c.steps = 2000;
  c.eval_every = 2000;
  const TrainResult res = train(c, data);
  CHECK(res.metrics.back().src_acc >= 0.99);
}

TEST_CASE("classification loss falls by step 500 on every synthetic task") {
  for (Task task : {Task::kNuisance, Task::kMoons}) {
    const ExperimentSpec spec = default_spec(Method::kVbda, task);
    const DomainPair data = load_task_data(spec);
    double first = 0.0, last = 0.0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      TrainConfig c = spec.train;
      c.steps = 500;
      c.eval_every = 500;
      c.seed = seed;
      const TrainResult res = train(c, data);
      first += res.metrics.front().losses.l_cls;
      last += res.metrics.back().losses.l_cls;
    }
    INFO(task_name(task));
    CHECK(first > last);
  }
}
