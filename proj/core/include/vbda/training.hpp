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
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vbda/data.hpp"
#include "vbda/models.hpp"
#include "vbda/objectives.hpp"

namespace vbda {

struct TrainConfig {
  double lambda_d = 0.0;
  double lambda_ce = 0.0;
  double lambda_s = 0.0;
  double lambda_t = 0.0;
  std::size_t steps = 2000;
  std::size_t batch_source = 64;
  std::size_t batch_target = 64;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double warmup = 0.2;  // fraction of steps over which lambda_d ramps up
  std::size_t eval_every = 100;
  std::uint64_t seed = 0;
  std::size_t hidden = 64;
  std::size_t latent_dim = 16;
  std::size_t classifier_hidden = 64;
  std::size_t discriminator_hidden = 64;
  bool sample_eval = false;  // evaluate with a sampled z instead of mu

  void validate() const;
  /// lambda_d after linear warm-up, exactly lambda_d from the boundary on.
  double lambda_d_at(std::size_t step) const;
  LossWeights weights_at(std::size_t step) const;
  Architecture architecture(std::size_t input_dim, std::size_t classes) const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct MetricsRecord {
  std::size_t step = 0;
  LossBreakdown losses;  // evaluated on the full source and target sets
  double i_l_t_oracle = 0.0;
  double lambda_d = 0.0;  // effective value at this step
  double src_acc = 0.0;
  double tgt_acc = 0.0;
  double ms = 0.0;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::uint64_t t = 0;

  AdamState() = default;
  explicit AdamState(std::span<Tensor* const> params);
};

/// Bias-corrected adaptive-moment update using each tensor's grad. A tensor
/// with no gradient is treated as having a zero gradient.
void adam_step(std::span<Tensor* const> params, AdamState& state,
               const AdamConfig& config);

/// Fraction of argmax-correct predictions. With `use_posterior_mean`, z = mu.
double evaluate(ModelParams& params, const Dataset& data, RngStream& rng,
                bool use_posterior_mean);

/// Class probabilities for every row of `x`.
Tensor predict_proba(ModelParams& params, const Tensor& x, RngStream& rng,
                     bool use_posterior_mean);

/// Loss breakdown and bounds over the full datasets (target labels are only
/// used for the oracle I_L).
MetricsRecord diagnose(ModelParams& params, const DomainPair& data,
                       const TrainConfig& config, std::size_t step);

class TrainingDiverged : public Error {
 public:
  TrainingDiverged(std::size_t step, const LossBreakdown& losses);
  /// Forward pass failed before a breakdown existed (e.g. non-finite logits).
  TrainingDiverged(std::size_t step, const std::string& reason);
  std::size_t step() const { return step_; }
  const LossBreakdown& losses() const { return losses_; }

 private:
  std::size_t step_;
  LossBreakdown losses_;
};

struct TrainResult {
  ModelParams params;
  std::vector<MetricsRecord> metrics;
};

/// Runs `steps` updates of the weighted objective. Records metrics at step 0,
/// every `eval_every` steps, and at the last step. Fully determined by
/// (config, data) apart from the `ms` field.
TrainResult train(const TrainConfig& config, const DomainPair& data);

}  // namespace vbda
