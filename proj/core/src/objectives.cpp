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

#include "vbda/objectives.hpp"

#include <algorithm>
#include <cmath>

namespace vbda {

namespace {

Var log_prob(Var p) { return log(clamp(p, kProbFloor, 1.0)); }

struct Encoded {
  GaussianLatent source;
  GaussianLatent target;
  Var z_s;
  Var z_t;
};

Encoded encode_batch(Graph& g, ModelParams& params, const DomainBatch& batch,
                     RngStream& rng) {
  Encoded e;
  e.source = encode(g, params, g.constant(batch.x_s));
  e.target = encode(g, params, g.constant(batch.x_t));
  e.z_s = reparameterize(g, e.source, rng);
  e.z_t = reparameterize(g, e.target, rng);
  return e;
}

}  // namespace

bool LossBreakdown::all_finite() const {
  for (double v : {l_cls, l_adv, l_ce, kl_s, kl_t, total, i_u_s, i_u_t, i_l_s}) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Var classification_loss(Var probs, std::span<const std::size_t> labels) {
  const std::size_t classes = probs.value().cols();
  for (auto y : labels) {
    if (y >= classes) {
      throw ContractError("classification_loss: label " + std::to_string(y) +
                          " outside [0, " + std::to_string(classes) + ")");
    }
  }
  return neg(mean(log_prob(pick(probs, labels))));
}

Var adversarial_loss(Var d_src, Var d_tgt) {
  Var src_term = mean(log_prob(d_src));
  Var tgt_term = mean(log_prob(shift(neg(d_tgt), 1.0)));
  return neg(add(src_term, tgt_term));
}

Var conditional_entropy(Var probs) {
  return neg(mean(sum_rows(mul(probs, log_prob(probs)))));
}

Var kl_to_standard_normal(const GaussianLatent& latent) {
  const double latent_dim = static_cast<double>(latent.mu.value().cols());
  Var terms = sub(add(mul(latent.mu, latent.mu), exp(latent.log_var)), latent.log_var);
  return scale(shift(mean(sum_rows(terms)), -latent_dim), 0.5);
}

Objective total_objective(Graph& g, ModelParams& params, const DomainBatch& batch,
                          const LossWeights& w, RngStream& rng, AdversaryGradient mode) {
  Encoded e = encode_batch(g, params, batch, rng);
  Var probs_s = classify(g, params, e.z_s);
  Var probs_t = classify(g, params, e.z_t);
  auto domain_prob = [&](Var z) {
    return mode == AdversaryGradient::kReversed ? discriminate(g, params, z, 1.0)
                                                : discriminator_head(g, params, z);
  };

  Objective o;
  o.l_cls = classification_loss(probs_s, batch.y_s);
  o.l_adv = adversarial_loss(domain_prob(e.z_s), domain_prob(e.z_t));
  o.l_ce = conditional_entropy(probs_t);
  o.kl_s = kl_to_standard_normal(e.source);
  o.kl_t = kl_to_standard_normal(e.target);

  Var total = add(o.l_cls, scale(o.l_adv, w.lambda_d));
  total = add(total, scale(o.l_ce, w.lambda_ce));
  total = add(total, scale(o.kl_s, w.lambda_s));
  total = add(total, scale(o.kl_t, w.lambda_t));
  o.total = total;

  LossBreakdown& b = o.breakdown;
  b.l_cls = o.l_cls.item();
  b.l_adv = o.l_adv.item();
  b.l_ce = o.l_ce.item();
  b.kl_s = o.kl_s.item();
  b.kl_t = o.kl_t.item();
  b.total = o.total.item();
  b.i_u_s = b.kl_s;
  b.i_u_t = b.kl_t;
  const auto marginal = label_marginal(batch.y_s, params.arch.classes);
  b.i_l_s = entropy(marginal) - b.l_cls;
  return o;
}

namespace baselines {

Var source_only(Graph& g, ModelParams& params, const DomainBatch& batch,
                RngStream& rng) {
  GaussianLatent src = encode(g, params, g.constant(batch.x_s));
  Var z_s = reparameterize(g, src, rng);
  return classification_loss(classify(g, params, z_s), batch.y_s);
}

Var dann(Graph& g, ModelParams& params, const DomainBatch& batch,
         double lambda_d, RngStream& rng) {
  Encoded e = encode_batch(g, params, batch, rng);
  Var cls = classification_loss(classify(g, params, e.z_s), batch.y_s);
  Var adv = adversarial_loss(discriminate(g, params, e.z_s, 1.0),
                             discriminate(g, params, e.z_t, 1.0));
  return add(cls, scale(adv, lambda_d));
}

Var dann_ce(Graph& g, ModelParams& params, const DomainBatch& batch,
            double lambda_d, double lambda_ce, RngStream& rng) {
  Encoded e = encode_batch(g, params, batch, rng);
  Var cls = classification_loss(classify(g, params, e.z_s), batch.y_s);
  Var adv = adversarial_loss(discriminate(g, params, e.z_s, 1.0),
                             discriminate(g, params, e.z_t, 1.0));
  Var ce = conditional_entropy(classify(g, params, e.z_t));
  return add(add(cls, scale(adv, lambda_d)), scale(ce, lambda_ce));
}

Var vib_only(Graph& g, ModelParams& params, const DomainBatch& batch,
             double lambda_s, double lambda_t, RngStream& rng) {
  Encoded e = encode_batch(g, params, batch, rng);
  Var cls = classification_loss(classify(g, params, e.z_s), batch.y_s);
  Var kl_s = kl_to_standard_normal(e.source);
  Var kl_t = kl_to_standard_normal(e.target);
  return add(add(cls, scale(kl_s, lambda_s)), scale(kl_t, lambda_t));
}

}  // namespace baselines

std::vector<double> kl_per_example(const Tensor& mu, const Tensor& log_var) {
  if (mu.shape != log_var.shape || mu.rank() != 2) {
    throw DimensionError("kl_per_example: mu " + shape_to_string(mu.shape) +
                         " vs log_var " + shape_to_string(log_var.shape));
  }
  const std::size_t n = mu.rows(), d = mu.cols();
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double m = mu.data[i * d + j];
      const double lv = log_var.data[i * d + j];
      acc += m * m + std::exp(lv) - 1.0 - lv;
    }
    out[i] = 0.5 * acc;
  }
  return out;
}

double mi_upper_bound(const Tensor& mu, const Tensor& log_var) {
  const auto kl = kl_per_example(mu, log_var);
  if (kl.empty()) throw ContractError("mi_upper_bound: empty sample");
  double s = 0.0;
  for (double v : kl) s += v;
  return std::max(0.0, s / static_cast<double>(kl.size()));
}

double mi_upper_bound(const GaussianLatent& latent) {
  return mi_upper_bound(latent.mu.value(), latent.log_var.value());
}

std::vector<double> label_marginal(std::span<const std::size_t> labels,
                                   std::size_t classes) {
  std::vector<double> p(classes, 0.0);
  if (labels.empty()) return p;
  for (auto y : labels) {
    if (y >= classes) throw ContractError("label_marginal: label out of range");
    p[y] += 1.0;
  }
  for (auto& v : p) v /= static_cast<double>(labels.size());
  return p;
}

double entropy(std::span<const double> dist) {
  double h = 0.0;
  for (double p : dist) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

double mi_lower_bound_labels(const Tensor& probs,
                             std::span<const std::size_t> labels,
                             std::span<const double> marginal) {
  if (probs.rank() != 2 || probs.rows() != labels.size() || labels.empty()) {
    throw DimensionError("mi_lower_bound_labels: probs " +
                         shape_to_string(probs.shape) + " for " +
                         std::to_string(labels.size()) + " labels");
  }
  const std::size_t k = probs.cols();
  double ce = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= k) throw ContractError("mi_lower_bound_labels: label out of range");
    ce -= std::log(std::clamp(probs.data[i * k + labels[i]], kProbFloor, 1.0));
  }
  ce /= static_cast<double>(labels.size());
  return entropy(marginal) - ce;
}

}  // namespace vbda
