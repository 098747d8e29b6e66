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

#include "vbda/models.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace vbda {

namespace {

Linear glorot(std::size_t in, std::size_t out, RngStream& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  std::vector<double> w(in * out);
  for (auto& v : w) v = rng.uniform(-limit, limit);
  return Linear{Tensor({in, out}, std::move(w), true),
                Tensor::zeros({1, out}, true)};
}

Linear zero_layer(std::size_t in, std::size_t out) {
  return Linear{Tensor::zeros({in, out}, true), Tensor::zeros({1, out}, true)};
}

void expect_width(Var x, std::size_t width, const char* what) {
  const Tensor& t = x.value();
  if (t.rank() != 2 || t.cols() != width) {
    throw DimensionError(std::string(what) + ": expected [batch x " +
                         std::to_string(width) + "], got " +
                         shape_to_string(t.shape));
  }
}

}  // namespace

std::vector<std::pair<std::string, Tensor*>> ModelParams::named() {
  return {
      {"enc_hidden1.weight", &enc_hidden1.weight},
      {"enc_hidden1.bias", &enc_hidden1.bias},
      {"enc_hidden2.weight", &enc_hidden2.weight},
      {"enc_hidden2.bias", &enc_hidden2.bias},
      {"enc_mu.weight", &enc_mu.weight},
      {"enc_mu.bias", &enc_mu.bias},
      {"enc_log_var.weight", &enc_log_var.weight},
      {"enc_log_var.bias", &enc_log_var.bias},
      {"cls_hidden.weight", &cls_hidden.weight},
      {"cls_hidden.bias", &cls_hidden.bias},
      {"cls_out.weight", &cls_out.weight},
      {"cls_out.bias", &cls_out.bias},
      {"disc_hidden.weight", &disc_hidden.weight},
      {"disc_hidden.bias", &disc_hidden.bias},
      {"disc_out.weight", &disc_out.weight},
      {"disc_out.bias", &disc_out.bias},
  };
}

std::vector<Tensor*> ModelParams::all() {
  std::vector<Tensor*> out;
  for (auto& [name, t] : named()) out.push_back(t);
  return out;
}

std::vector<Tensor*> ModelParams::encoder() {
  return {&enc_hidden1.weight, &enc_hidden1.bias, &enc_hidden2.weight,
          &enc_hidden2.bias,   &enc_mu.weight,    &enc_mu.bias,
          &enc_log_var.weight, &enc_log_var.bias};
}

std::vector<Tensor*> ModelParams::classifier() {
  return {&cls_hidden.weight, &cls_hidden.bias, &cls_out.weight, &cls_out.bias};
}

std::vector<Tensor*> ModelParams::discriminator() {
  return {&disc_hidden.weight, &disc_hidden.bias, &disc_out.weight,
          &disc_out.bias};
}

void ModelParams::zero_grad() {
  for (Tensor* t : all()) {
    t->ensure_grad();
    t->zero_grad();
  }
}

ModelParams init_params(const Architecture& arch, RngStream& rng) {
  if (arch.input_dim == 0 || arch.hidden == 0 || arch.latent_dim == 0 ||
      arch.classes < 2 || arch.classifier_hidden == 0 ||
      arch.discriminator_hidden == 0) {
    throw ContractError("init_params: architecture widths must be positive and classes >= 2");
  }
  ModelParams p;
  p.arch = arch;
  p.enc_hidden1 = glorot(arch.input_dim, arch.hidden, rng);
  p.enc_hidden2 = glorot(arch.hidden, arch.hidden, rng);
  p.enc_mu = glorot(arch.hidden, arch.latent_dim, rng);
  p.enc_log_var = zero_layer(arch.hidden, arch.latent_dim);
  p.cls_hidden = glorot(arch.latent_dim, arch.classifier_hidden, rng);
  p.cls_out = glorot(arch.classifier_hidden, arch.classes, rng);
  p.disc_hidden = glorot(arch.latent_dim, arch.discriminator_hidden, rng);
  p.disc_out = glorot(arch.discriminator_hidden, 1, rng);
  return p;
}

Var linear(Graph& g, Linear& layer, Var x) {
  return add_bias(matmul(x, g.parameter(layer.weight)), g.parameter(layer.bias));
}

GaussianLatent encode(Graph& g, ModelParams& params, Var x) {
  expect_width(x, params.arch.input_dim, "encode");
  Var h = tanh(linear(g, params.enc_hidden1, x));
  h = tanh(linear(g, params.enc_hidden2, h));
  Var mu = linear(g, params.enc_mu, h);
  Var log_var = clamp(linear(g, params.enc_log_var, h), kLogVarMin, kLogVarMax);
  return {mu, log_var};
}

Var reparameterize(Graph& g, const GaussianLatent& latent, RngStream& rng) {
  const Shape& shape = latent.mu.shape();
  std::vector<double> eps(shape_size(shape));
  for (auto& v : eps) v = rng.normal();
  return reparameterize(g, latent, Tensor(shape, std::move(eps)));
}

Var reparameterize(Graph& g, const GaussianLatent& latent, const Tensor& eps) {
  if (latent.mu.shape() != latent.log_var.shape() ||
      eps.shape != latent.mu.shape()) {
    throw DimensionError("reparameterize: mu " +
                         shape_to_string(latent.mu.shape()) + ", log_var " +
                         shape_to_string(latent.log_var.shape()) + ", eps " +
                         shape_to_string(eps.shape));
  }
  Var sigma = exp(scale(latent.log_var, 0.5));
  return add(latent.mu, mul(sigma, g.constant(eps)));
}

Var classify_logits(Graph& g, ModelParams& params, Var z) {
  expect_width(z, params.arch.latent_dim, "classify");
  Var h = tanh(linear(g, params.cls_hidden, z));
  return linear(g, params.cls_out, h);
}

Var classify(Graph& g, ModelParams& params, Var z) {
  return softmax_rows(classify_logits(g, params, z));
}

Var discriminate(Graph& g, ModelParams& params, Var z, double lambda_d) {
  expect_width(z, params.arch.latent_dim, "discriminate");
  return discriminator_head(g, params, gradient_reversal(z, lambda_d));
}

Var discriminator_head(Graph& g, ModelParams& params, Var z) {
  expect_width(z, params.arch.latent_dim, "discriminator_head");
  Var h = tanh(linear(g, params.disc_hidden, z));
  return sigmoid(linear(g, params.disc_out, h));
}

void save_checkpoint(const std::filesystem::path& path, ModelParams& params) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  const Architecture& a = params.arch;
  out << "vbda-checkpoint 1\n";
  out << "arch " << a.input_dim << ' ' << a.hidden << ' ' << a.latent_dim << ' '
      << a.classes << ' ' << a.classifier_hidden << ' '
      << a.discriminator_hidden << '\n';
  char buf[32];
  for (auto& [name, t] : params.named()) {
    out << "tensor " << name << ' ' << t->rows() << ' ' << t->cols() << '\n';
    for (std::size_t i = 0; i < t->size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", t->data[i]);
      out << (i ? " " : "") << buf;
    }
    out << '\n';
  }
  if (!out) throw Error("failed writing checkpoint " + path.string());
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read checkpoint " + path.string());
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "vbda-checkpoint" || version != 1) {
    throw FormatError("checkpoint " + path.string() + ": bad header");
  }
  std::string tag;
  Architecture a;
  in >> tag >> a.input_dim >> a.hidden >> a.latent_dim >> a.classes >>
      a.classifier_hidden >> a.discriminator_hidden;
  if (!in || tag != "arch") {
    throw FormatError("checkpoint " + path.string() + ": bad arch line");
  }
  RngStream unused(0);
  ModelParams p = init_params(a, unused);
  for (auto& [name, t] : p.named()) {
    std::string got_name;
    std::size_t rows = 0, cols = 0;
    in >> tag >> got_name >> rows >> cols;
    if (!in || tag != "tensor" || got_name != name || rows != t->rows() ||
        cols != t->cols()) {
      throw FormatError("checkpoint " + path.string() + ": expected tensor " +
                        name + " " + shape_to_string(t->shape));
    }
    for (auto& v : t->data) {
      if (!(in >> v)) {
        throw FormatError("checkpoint " + path.string() +
                          ": truncated values for " + name);
      }
    }
  }
  return p;
}

}  // namespace vbda
