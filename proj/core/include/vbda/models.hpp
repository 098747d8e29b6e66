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

// Stochastic encoder, label classifier and domain discriminator.
//
//   encoder:       d_x -> hidden -> hidden -> { mu head, log_var head }   (tanh)
//   classifier:    d_z -> classifier_hidden -> K logits -> softmax         (tanh)
//   discriminator: d_z -> gradient reversal -> disc_hidden -> 1 -> sigmoid (tanh)

#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "vbda/autodiff.hpp"
#include "vbda/rng.hpp"

namespace vbda {

inline constexpr double kLogVarMin = -10.0;
inline constexpr double kLogVarMax = 10.0;

struct Architecture {
  std::size_t input_dim = 0;
  std::size_t hidden = 64;
  std::size_t latent_dim = 16;
  std::size_t classes = 2;
  std::size_t classifier_hidden = 64;
  std::size_t discriminator_hidden = 64;

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

struct Linear {
  Tensor weight;  // [in x out]
  Tensor bias;    // [1 x out]
};

struct ModelParams {
  Architecture arch;
  Linear enc_hidden1;
  Linear enc_hidden2;
  Linear enc_mu;
  Linear enc_log_var;
  Linear cls_hidden;
  Linear cls_out;
  Linear disc_hidden;
  Linear disc_out;

  /// Stable (name, tensor) listing used by checkpoints and the optimizer.
  std::vector<std::pair<std::string, Tensor*>> named();
  std::vector<Tensor*> all();
  std::vector<Tensor*> encoder();
  std::vector<Tensor*> classifier();
  std::vector<Tensor*> discriminator();

  void zero_grad();
};

/// Glorot-uniform weights, zero biases; the log-variance head starts at zero
/// so every posterior begins with unit variance.
ModelParams init_params(const Architecture& arch, RngStream& rng);

/// Posterior N(mu, diag(exp(log_var))) of the stochastic encoder.
struct GaussianLatent {
  Var mu;
  Var log_var;
};

Var linear(Graph& g, Linear& layer, Var x);

/// log_var is clamped to [kLogVarMin, kLogVarMax].
GaussianLatent encode(Graph& g, ModelParams& params, Var x);

/// z = mu + exp(log_var / 2) * eps with eps ~ N(0, I) drawn from `rng`.
Var reparameterize(Graph& g, const GaussianLatent& latent, RngStream& rng);
/// Same map with an explicit noise tensor.
Var reparameterize(Graph& g, const GaussianLatent& latent, const Tensor& eps);

Var classify_logits(Graph& g, ModelParams& params, Var z);
/// Class probabilities, rows sum to one.
Var classify(Graph& g, ModelParams& params, Var z);

/// Probability that z came from the source domain. Gradient reversal with
/// coefficient `lambda_d` sits between z and the discriminator layers.
Var discriminate(Graph& g, ModelParams& params, Var z, double lambda_d);
/// The discriminator layers alone, with no gradient reversal.
Var discriminator_head(Graph& g, ModelParams& params, Var z);

// Text checkpoint:
//   vbda-checkpoint 1
//   arch <input_dim> <hidden> <latent_dim> <classes> <classifier_hidden> <discriminator_hidden>
//   tensor <name> <rows> <cols>
//   <rows*cols values, %.17g>
//   ...
void save_checkpoint(const std::filesystem::path& path, ModelParams& params);
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace vbda
