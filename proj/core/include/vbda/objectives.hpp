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

// Loss terms of the bottleneck domain-adaptation objective
//
//   total = l_cls + lambda_d * l_adv + lambda_ce * l_ce
//         + lambda_s * kl_s + lambda_t * kl_t
//
// and the mutual-information diagnostics derived from them. All values are
// in nats. Every log of a probability goes through a clamp to
// [kProbFloor, 1].

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "vbda/autodiff.hpp"
#include "vbda/data.hpp"
#include "vbda/models.hpp"
#include "vbda/rng.hpp"

namespace vbda {

inline constexpr double kProbFloor = 1e-12;

struct LossWeights {
  double lambda_d = 0.0;
  double lambda_ce = 0.0;
  double lambda_s = 0.0;
  double lambda_t = 0.0;
};

struct LossBreakdown {
  double l_cls = 0.0;
  double l_adv = 0.0;
  double l_ce = 0.0;
  double kl_s = 0.0;
  double kl_t = 0.0;
  double total = 0.0;
  double i_u_s = 0.0;
  double i_u_t = 0.0;
  double i_l_s = 0.0;

  bool all_finite() const;
};

/// Mean of -log p(label) over the batch.
Var classification_loss(Var probs, std::span<const std::size_t> labels);

/// -mean log d_src - mean log(1 - d_tgt), where d is P(source).
Var adversarial_loss(Var d_src, Var d_tgt);

/// Mean row entropy -sum_y h log h. Non-negative; this is minimised.
Var conditional_entropy(Var probs);

/// Mean over the batch of KL(N(mu, exp(log_var)) || N(0, I)).
Var kl_to_standard_normal(const GaussianLatent& latent);

struct Objective {
  Var total;
  Var l_cls;
  Var l_adv;
  Var l_ce;
  Var kl_s;
  Var kl_t;
  LossBreakdown breakdown;
};

/// How the adversarial term differentiates into the encoder.
///   kReversed: the discriminator sees z through a unit gradient reversal, so
///              the encoder ascends lambda_d * l_adv while the discriminator
///              descends it. Used for training.
///   kPlain:    no reversal; backward yields the ordinary gradient of `total`.
enum class AdversaryGradient { kReversed, kPlain };

/// Encodes both domains, draws one z per example (source noise first, then
/// target), and assembles the weighted sum.
Objective total_objective(Graph& g, ModelParams& params, const DomainBatch& batch,
                          const LossWeights& weights, RngStream& rng,
                          AdversaryGradient mode = AdversaryGradient::kReversed);

// Reference objectives for the baseline methods, built directly from the
// component terms. Used to pin the ablation identities of total_objective.
namespace baselines {
Var source_only(Graph& g, ModelParams& params, const DomainBatch& batch,
                RngStream& rng);
Var dann(Graph& g, ModelParams& params, const DomainBatch& batch,
         double lambda_d, RngStream& rng);
Var dann_ce(Graph& g, ModelParams& params, const DomainBatch& batch,
            double lambda_d, double lambda_ce, RngStream& rng);
Var vib_only(Graph& g, ModelParams& params, const DomainBatch& batch,
             double lambda_s, double lambda_t, RngStream& rng);
}  // namespace baselines

/// Per-example KL of each posterior row to N(0, I).
std::vector<double> kl_per_example(const Tensor& mu, const Tensor& log_var);

/// I_U: mean per-example KL to the standard normal prior.
double mi_upper_bound(const Tensor& mu, const Tensor& log_var);
double mi_upper_bound(const GaussianLatent& latent);

/// Empirical class frequencies.
std::vector<double> label_marginal(std::span<const std::size_t> labels,
                                   std::size_t classes);

/// Shannon entropy in nats of a distribution.
double entropy(std::span<const double> dist);

/// I_L = H(Y) - mean cross-entropy, with H taken from `marginal`.
/// Never exceeds H(Y); negative for a classifier worse than the prior.
double mi_lower_bound_labels(const Tensor& probs,
                             std::span<const std::size_t> labels,
                             std::span<const double> marginal);

}  // namespace vbda
