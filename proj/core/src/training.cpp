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

#include "vbda/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

namespace vbda {

void TrainConfig::validate() const {
  for (double l : {lambda_d, lambda_ce, lambda_s, lambda_t}) {
    if (!(l >= 0.0) || !std::isfinite(l)) {
      throw ContractError("train config: lambda weights must be finite and >= 0");
    }
  }
  if (!(lr > 0.0)) throw ContractError("train config: lr must be > 0");
  if (!(warmup >= 0.0 && warmup <= 1.0)) {
    throw ContractError("train config: warmup must lie in [0, 1]");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ContractError("train config: Adam betas must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw ContractError("train config: adam eps must be > 0");
  if (batch_source == 0 || batch_target == 0) {
    throw ContractError("train config: batch sizes must be positive");
  }
  if (eval_every == 0) throw ContractError("train config: eval_every must be positive");
  if (hidden == 0 || latent_dim == 0 || classifier_hidden == 0 ||
      discriminator_hidden == 0) {
    throw ContractError("train config: layer widths must be positive");
  }
}

double TrainConfig::lambda_d_at(std::size_t step) const {
  const double boundary = warmup * static_cast<double>(steps);
  if (boundary <= 0.0) return lambda_d;
  const double ramp = std::min(1.0, static_cast<double>(step) / boundary);
  return lambda_d * ramp;
}

LossWeights TrainConfig::weights_at(std::size_t step) const {
  return LossWeights{lambda_d_at(step), lambda_ce, lambda_s, lambda_t};
}

Architecture TrainConfig::architecture(std::size_t input_dim,
                                       std::size_t classes) const {
  Architecture a;
  a.input_dim = input_dim;
  a.hidden = hidden;
  a.latent_dim = latent_dim;
  a.classes = classes;
  a.classifier_hidden = classifier_hidden;
  a.discriminator_hidden = discriminator_hidden;
  return a;
}

AdamState::AdamState(std::span<Tensor* const> params) {
  for (const Tensor* p : params) {
    m.emplace_back(p->size(), 0.0);
    v.emplace_back(p->size(), 0.0);
  }
}

void adam_step(std::span<Tensor* const> params, AdamState& state,
               const AdamConfig& c) {
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw ContractError("adam_step: state holds " + std::to_string(state.m.size()) +
                        " tensors, params " + std::to_string(params.size()));
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (state.m[k].size() != params[k]->size() ||
        state.v[k].size() != params[k]->size()) {
      throw ContractError("adam_step: state shape mismatch for tensor " +
                          std::to_string(k));
    }
  }
  ++state.t;
  const double t = static_cast<double>(state.t);
  const double correct1 = 1.0 - std::pow(c.beta1, t);
  const double correct2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = *params[k];
    auto& m = state.m[k];
    auto& v = state.v[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double g = p.grad ? (*p.grad)[i] : 0.0;
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g;
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g * g;
      const double m_hat = m[i] / correct1;
      const double v_hat = v[i] / correct2;
      p.data[i] -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
    }
  }
}

Tensor predict_proba(ModelParams& params, const Tensor& x, RngStream& rng,
                     bool use_posterior_mean) {
  Graph g;
  GaussianLatent latent = encode(g, params, g.constant(x));
  Var z = use_posterior_mean ? latent.mu : reparameterize(g, latent, rng);
  return classify(g, params, z).value();
}

double evaluate(ModelParams& params, const Dataset& data, RngStream& rng,
                bool use_posterior_mean) {
  data.validate();
  const Tensor probs = predict_proba(params, data.x, rng, use_posterior_mean);
  const std::size_t k = probs.cols();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double* row = probs.data.data() + i * k;
    const auto best = static_cast<std::size_t>(std::max_element(row, row + k) - row);
    if (best == data.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

MetricsRecord diagnose(ModelParams& params, const DomainPair& data,
                       const TrainConfig& config, std::size_t step) {
  RngStream rng = RngStream(config.seed).derive("diagnostics").derive(step);
  MetricsRecord r;
  r.step = step;
  r.lambda_d = config.lambda_d_at(step);

  DomainBatch full{data.source.x, data.source.labels, data.target.inputs()};
  {
    Graph g;
    Objective o = total_objective(g, params, full, config.weights_at(step), rng);
    r.losses = o.breakdown;
  }

  const Dataset& target = data.target.evaluation_view();
  const Tensor probs_t = predict_proba(params, target.x, rng, false);
  r.i_l_t_oracle = mi_lower_bound_labels(
      probs_t, target.labels, label_marginal(target.labels, target.classes));

  RngStream eval_rng = rng.derive("accuracy");
  r.src_acc = evaluate(params, data.source, eval_rng, !config.sample_eval);
  r.tgt_acc = evaluate(params, target, eval_rng, !config.sample_eval);
  return r;
}

namespace {

std::string describe(std::size_t step, const LossBreakdown& b) {
  std::ostringstream os;
  os.precision(17);
  os << "non-finite loss at step " << step << ": l_cls=" << b.l_cls
     << " l_adv=" << b.l_adv << " l_ce=" << b.l_ce << " kl_s=" << b.kl_s
     << " kl_t=" << b.kl_t << " total=" << b.total;
  return os.str();
}

}  // namespace

TrainingDiverged::TrainingDiverged(std::size_t step, const LossBreakdown& losses)
    : Error(describe(step, losses)), step_(step), losses_(losses) {}

TrainingDiverged::TrainingDiverged(std::size_t step, const std::string& reason)
    : Error("non-finite values at step " + std::to_string(step) + ": " + reason),
      step_(step),
      losses_() {}

TrainResult train(const TrainConfig& config, const DomainPair& data) {
  config.validate();
  data.source.validate();
  if (data.target.size() == 0) throw ContractError("train: empty target domain");
  if (data.target.inputs().cols() != data.source.dim()) {
    throw DimensionError("train: source and target input widths differ");
  }

  const RngStream root(config.seed);
  RngStream init_rng = root.derive("init");
  TrainResult result{
      init_params(config.architecture(data.source.dim(), data.source.classes),
                  init_rng),
      {}};
  if (config.steps == 0) return result;

  ModelParams& params = result.params;
  const std::vector<Tensor*> tensors = params.all();
  AdamState state(tensors);
  const AdamConfig adam{config.lr, config.beta1, config.beta2, config.adam_eps};
  BatchIterator batches(data.source, data.target.inputs(), config.batch_source,
                        config.batch_target, root.derive("batches"));
  RngStream noise = root.derive("noise");

  const auto start = std::chrono::steady_clock::now();
  auto record = [&](std::size_t step) {
    MetricsRecord r;
    try {
      r = diagnose(params, data, config, step);
    } catch (const DomainError& e) {
      throw TrainingDiverged(step, e.what());
    }
    r.ms = std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - start)
               .count();
    result.metrics.push_back(r);
  };

  record(0);
  for (std::size_t step = 0; step < config.steps; ++step) {
    const DomainBatch batch = batches.next();
    params.zero_grad();
    Graph g;
    Objective o;
    try {
      o = total_objective(g, params, batch, config.weights_at(step), noise);
    } catch (const DomainError& e) {
      throw TrainingDiverged(step, e.what());
    }
    if (!o.breakdown.all_finite()) throw TrainingDiverged(step, o.breakdown);
    g.backward(o.total);
    adam_step(tensors, state, adam);

    const std::size_t done = step + 1;
    if (done % config.eval_every == 0 || done == config.steps) record(done);
  }
  return result;
}

}  // namespace vbda
