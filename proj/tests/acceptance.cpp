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

// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails.
//
//   vbda_acceptance --data <digits dir> --out <scratch dir> [--only N]...

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "test_util.hpp"
#include "vbda/experiment.hpp"
#include "vbda/gradcheck.hpp"
#include "vbda/models.hpp"
#include "vbda/objectives.hpp"

namespace fs = std::filesystem;
using namespace vbda;
using vbda::testing::random_tensor;
using vbda::testing::slurp;
using vbda::testing::toy_batch;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Context {
  fs::path data_dir;
  fs::path out_dir;
  // VBDA nuisance runs, shared by the ordering and MI-curve checks.
  std::optional<ExperimentSummary> vbda_nuisance;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Architecture toy_arch(std::size_t d_x, std::size_t classes) {
  Architecture a;
  a.input_dim = d_x;
  a.hidden = 6;
  a.latent_dim = 3;
  a.classes = classes;
  a.classifier_hidden = 5;
  a.discriminator_hidden = 4;
  return a;
}

// Gradient check of the full weighted objective on random toy batches.
Outcome gradient_correctness(Context&) {
  const auto t0 = std::chrono::steady_clock::now();
  RngStream r = RngStream(101).derive("gradcheck");
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t k = 2 + r.below(3), d_x = 3 + r.below(3);
    ModelParams p = init_params(toy_arch(d_x, k), r);
    for (auto& v : p.enc_log_var.weight.data) v = 0.3 * r.normal();
    const DomainBatch b = toy_batch(4 + r.below(5), 4 + r.below(5), d_x, k, r);
    const LossWeights w{r.uniform(), r.uniform(), r.uniform(), r.uniform()};
    const RngStream frozen = r.derive(static_cast<std::uint64_t>(trial));
    auto f = [&](Graph& g) {
      RngStream noise = frozen;
      return total_objective(g, p, b, w, noise, AdversaryGradient::kPlain).total;
    };
    worst = std::max(worst, finite_difference_check(f, p.all()).max_rel_err);
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-4 && secs < 10.0,
          "20 batches, max rel err " + fmt("%.3g", worst) + ", " + fmt("%.1f", secs) + " s"};
}

// Analytic KL against a Monte Carlo average of log q(z) - log p(z), z ~ q.
Outcome kl_oracle(Context&) {
  const auto t0 = std::chrono::steady_clock::now();
  RngStream r = RngStream(102).derive("kl");
  const std::size_t n = 1000000, d = 3;
  int agree = 0;
  double worst_z = 0.0;
  for (int post = 0; post < 50; ++post) {
    std::vector<double> mu(d), lv(d);
    for (std::size_t j = 0; j < d; ++j) {
      mu[j] = 1.5 * r.normal();
      lv[j] = r.uniform() * 3.0 - 2.0;
    }
    Graph g;
    const GaussianLatent latent{g.constant(Tensor({1, d}, mu)), g.constant(Tensor({1, d}, lv))};
    const double analytic = kl_to_standard_normal(latent).item();

    double s = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double log_ratio = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double e = r.normal();
        const double z = mu[j] + std::exp(0.5 * lv[j]) * e;
        // log N(z; mu, var) - log N(z; 0, 1); the 2 pi terms cancel.
        log_ratio += -0.5 * lv[j] - 0.5 * e * e + 0.5 * z * z;
      }
      s += log_ratio;
      s2 += log_ratio * log_ratio;
    }
    const double mean = s / n;
    const double se = std::sqrt((s2 / n - mean * mean) / n);
    const double zscore = std::abs(analytic - mean) / se;
    worst_z = std::max(worst_z, zscore);
    if (zscore <= 3.0) ++agree;
  }
  const double secs = seconds_since(t0);
  return {agree == 50 && secs < 30.0,
          std::to_string(agree) + "/50 within 3 SE (worst " + fmt("%.2f", worst_z) + " SE), " +
              fmt("%.1f", secs) + " s"};
}

// Sample mean and std of reparameterised draws against (mu, exp(log_var / 2)).
Outcome reparameterization_stats(Context&) {
  RngStream r = RngStream(103).derive("reparam");
  const std::size_t n = 1000000;
  int agree = 0, checks = 0;
  double worst_z = 0.0;
  for (int post = 0; post < 10; ++post) {
    const double mu = 2.0 * r.normal();
    const double lv = r.uniform() * 4.0 - 2.0;
    const double sigma = std::exp(0.5 * lv);
    Graph g;
    const GaussianLatent latent{g.constant(Tensor({n, 1}, std::vector<double>(n, mu))),
                                g.constant(Tensor({n, 1}, std::vector<double>(n, lv)))};
    const Tensor z = reparameterize(g, latent, r).value();
    double s = 0.0, s2 = 0.0;
    for (double v : z.data) {
      s += v;
      s2 += v * v;
    }
    const double mean = s / n;
    const double sd = std::sqrt((s2 / n - mean * mean) * n / (n - 1));
    // Standard errors of the sample mean and sample std of a normal.
    const double z_mean = std::abs(mean - mu) / (sigma / std::sqrt(double(n)));
    const double z_sd = std::abs(sd - sigma) / (sigma / std::sqrt(2.0 * (n - 1)));
    for (double zs : {z_mean, z_sd}) {
      ++checks;
      worst_z = std::max(worst_z, zs);
      if (zs <= 3.0) ++agree;
    }
  }
  return {agree == checks, std::to_string(agree) + "/" + std::to_string(checks) +
                               " moments within 3 SE (worst " + fmt("%.2f", worst_z) + " SE)"};
}

// Zeroed lambda weights reproduce each baseline's value and gradients exactly.
Outcome ablation_identities(Context&) {
  RngStream r = RngStream(104).derive("ablation");
  ModelParams p = init_params(toy_arch(4, 3), r);
  const DomainBatch b = toy_batch(8, 8, 4, 3, r);

  using Build = std::function<Var(Graph&, RngStream&)>;
  auto run = [&](const Build& build) {
    p.zero_grad();
    Graph g;
    RngStream noise(77);
    Var v = build(g, noise);
    g.backward(v);
    std::vector<std::vector<double>> grads;
    for (Tensor* t : p.all()) grads.push_back(*t->grad);
    return std::make_pair(v.item(), grads);
  };
  auto full = [&](LossWeights w) {
    return run([&, w](Graph& g, RngStream& n) { return total_objective(g, p, b, w, n).total; });
  };

  struct Case {
    const char* name;
    LossWeights w;
    Build baseline;
  };
  const std::vector<Case> cases{
      {"source_only", {}, [&](Graph& g, RngStream& n) { return baselines::source_only(g, p, b, n); }},
      {"dann", {0.7, 0, 0, 0}, [&](Graph& g, RngStream& n) { return baselines::dann(g, p, b, 0.7, n); }},
      {"dann_ce", {0.7, 0.2, 0, 0},
       [&](Graph& g, RngStream& n) { return baselines::dann_ce(g, p, b, 0.7, 0.2, n); }},
      {"vib_only", {0, 0, 0.1, 0.01},
       [&](Graph& g, RngStream& n) { return baselines::vib_only(g, p, b, 0.1, 0.01, n); }},
  };
  std::string failed;
  for (const Case& c : cases) {
    if (full(c.w) != run(c.baseline)) failed += std::string(" ") + c.name;
  }
  return {failed.empty(), failed.empty() ? "4/4 baselines bit-exact (value and gradients)"
                                         : "mismatch:" + failed};
}

ExperimentSpec nuisance_spec(Method m, const fs::path& out) {
  ExperimentSpec s = default_spec(m, Task::kNuisance);
  s.name = "nuisance_" + std::string(method_name(m));
  s.output_dir = out;
  return s;
}

const ExperimentSummary& vbda_nuisance(Context& ctx) {
  if (!ctx.vbda_nuisance) {
    ctx.vbda_nuisance = run_experiment(nuisance_spec(Method::kVbda, ctx.out_dir / "nuisance"));
  }
  return *ctx.vbda_nuisance;
}

Outcome nuisance_ordering(Context& ctx) {
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path out = ctx.out_dir / "nuisance";
  const double src = run_experiment(nuisance_spec(Method::kSourceOnly, out)).mean;
  const double dce = run_experiment(nuisance_spec(Method::kDannCe, out)).mean;
  const double vb = vbda_nuisance(ctx).mean;
  const double secs = seconds_since(t0);
  const bool pass = src < dce && dce < vb && vb - dce >= 0.02 && secs < 300.0;
  return {pass, "source_only " + fmt("%.4f", src) + ", dann_ce " + fmt("%.4f", dce) + ", vbda " +
                    fmt("%.4f", vb) + ", gap " + fmt("%+.2f", 100.0 * (vb - dce)) + " pp, " +
                    fmt("%.0f", secs) + " s"};
}

Outcome mi_directionality(Context& ctx) {
  const ExperimentSummary& sum = vbda_nuisance(ctx);
  const std::size_t steps = default_spec(Method::kVbda, Task::kNuisance).train.steps;
  int good = 0;
  std::ostringstream detail;
  for (const SeedResult& r : sum.per_seed) {
    const LossBreakdown& first = r.metrics.front().losses;
    double us = 0.0, ut = 0.0, ls = 0.0;
    int tail = 0;
    for (const MetricsRecord& m : r.metrics) {
      if (10 * m.step < 9 * steps) continue;  // final 10% of steps
      us += m.losses.i_u_s;
      ut += m.losses.i_u_t;
      ls += m.losses.i_l_s;
      ++tail;
    }
    us /= tail;
    ut /= tail;
    ls /= tail;
    const bool ok = us < first.i_u_s && ut < first.i_u_t && ls > first.i_l_s;
    if (ok) ++good;
    detail << " s" << r.seed << (ok ? "+" : "-");
  }
  return {good >= 4, std::to_string(good) + "/" + std::to_string(sum.per_seed.size()) +
                         " seeds with I_U(s), I_U(t) down and I_L(s) up;" + detail.str()};
}

// Per-seed target accuracy at each sweep value.
std::vector<std::vector<double>> per_seed_acc(const std::vector<SweepRow>& rows) {
  std::vector<std::vector<double>> acc(rows.front().summary.per_seed.size());
  for (const SweepRow& row : rows) {
    for (std::size_t s = 0; s < acc.size(); ++s) acc[s].push_back(row.summary.per_seed[s].tgt_acc);
  }
  return acc;
}

std::optional<std::vector<SweepRow>> digits_sweep;

Outcome lambda_s_sweep(Context& ctx) {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentSpec base = digits_spec(Method::kVbda, ctx.data_dir);
  base.output_dir = ctx.out_dir / "digits";
  digits_sweep = run_sweep(base, SweepParam::kLambdaS, {1e-2, 1e-3, 1e-4, 1e-5});
  const double secs = seconds_since(t0);

  int interior = 0;
  std::ostringstream detail;
  for (const auto& acc : per_seed_acc(*digits_sweep)) {
    // The best value must beat both endpoints outright.
    const double best_inner = std::max(acc[1], acc[2]);
    const bool ok = best_inner > acc.front() && best_inner > acc.back();
    if (ok) ++interior;
    detail << " [";
    for (std::size_t i = 0; i < acc.size(); ++i) detail << (i ? " " : "") << fmt("%.3f", acc[i]);
    detail << "]";
  }
  return {interior >= 4 && secs < 900.0,
          std::to_string(interior) + "/5 seeds peak inside {1e-2..1e-5}, " + fmt("%.0f", secs) +
              " s;" + detail.str()};
}

Outcome digits_improvement(Context& ctx) {
  ExperimentSpec src = digits_spec(Method::kSourceOnly, ctx.data_dir);
  src.output_dir = ctx.out_dir / "digits";
  const double so = run_experiment(src).mean;

  ExperimentSpec vb = digits_spec(Method::kVbda, ctx.data_dir);
  vb.output_dir = ctx.out_dir / "digits";
  double v = std::nan("");
  if (digits_sweep) {
    for (const SweepRow& row : *digits_sweep) {
      if (row.value == vb.train.lambda_s) v = row.summary.mean;  // identical config and seeds
    }
  }
  if (std::isnan(v)) v = run_experiment(vb).mean;
  return {v - so >= 0.05, "source_only " + fmt("%.4f", so) + ", vbda " + fmt("%.4f", v) +
                              ", gain " + fmt("%+.2f", 100.0 * (v - so)) + " pp"};
}

Outcome determinism(Context& ctx) {
  std::string mismatched;
  int compared = 0;
  for (Task task : {Task::kNuisance, Task::kMoons}) {
    ExperimentSpec s = default_spec(Method::kVbda, task);
    s.name = "det_" + std::string(task_name(task));
    s.seeds = {0, 1};
    s.train.steps = 300;
    s.train.eval_every = 50;
    for (const char* run : {"a", "b"}) {
      s.output_dir = ctx.out_dir / "determinism" / run;
      run_experiment(s);
    }
    for (std::uint64_t seed : s.seeds) {
      const std::string f = s.name + "_seed" + std::to_string(seed) + ".csv";
      ++compared;
      if (slurp(ctx.out_dir / "determinism" / "a" / f) !=
          slurp(ctx.out_dir / "determinism" / "b" / f)) {
        mismatched += " " + f;
      }
    }
  }
  return {mismatched.empty(), mismatched.empty()
                                  ? std::to_string(compared) + " metrics CSVs byte-identical"
                                  : "differ:" + mismatched};
}

Outcome invariants(Context&) {
  RngStream r = RngStream(110).derive("invariants");
  int bad_ce = 0, bad_softmax = 0, bad_iu = 0;
  double worst_row = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t rows = 1 + r.below(16), k = 2 + r.below(9);
    const double spread = std::pow(10.0, r.uniform() * 5.0 - 2.0);  // 0.01 .. 1000
    Graph g;
    Var probs = softmax_rows(g.constant(random_tensor(rows, k, r, spread, false)));
    for (std::size_t i = 0; i < rows; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < k; ++j) s += probs.value().at(i, j);
      worst_row = std::max(worst_row, std::abs(s - 1.0));
      if (std::abs(s - 1.0) > 1e-12) ++bad_softmax;
    }
    const double h = conditional_entropy(probs).item();
    if (!(h >= 0.0 && h <= std::log(double(k)) + 1e-12)) ++bad_ce;

    const Tensor mu = random_tensor(rows, 3, r, spread, false);
    const Tensor lv = random_tensor(rows, 3, r, 3.0, false);
    if (!(mi_upper_bound(mu, lv) >= 0.0)) ++bad_iu;
  }
  // Uniform rows sit exactly at the upper bound.
  for (std::size_t k = 2; k <= 10; ++k) {
    Graph g;
    const double h = conditional_entropy(softmax_rows(g.constant(Tensor::zeros({3, k})))).item();
    if (std::abs(h - std::log(double(k))) > 1e-12) ++bad_ce;
  }
  return {bad_ce + bad_softmax + bad_iu == 0,
          "1000 random draws: entropy out of range " + std::to_string(bad_ce) +
              ", softmax rows off " + std::to_string(bad_softmax) + " (worst " +
              fmt("%.1e", worst_row) + "), negative I_U " + std::to_string(bad_iu)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  Context ctx;
  std::vector<int> only;
  app.add_option("--data", ctx.data_dir, "directory with the digits IDX files")->required();
  app.add_option("--out", ctx.out_dir, "scratch output directory")->required();
  app.add_option("--only", only, "run just these criteria");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<const char*, std::function<Outcome(Context&)>>> criteria{
      {"gradient correctness", gradient_correctness},
      {"KL oracle agreement", kl_oracle},
      {"reparameterization statistics", reparameterization_stats},
      {"ablation identities", ablation_identities},
      {"nuisance-task ordering", nuisance_ordering},
      {"MI-curve directionality", mi_directionality},
      {"lambda_s sweep shape", lambda_s_sweep},
      {"digits-proxy improvement", digits_improvement},
      {"determinism", determinism},
      {"entropy/normalization invariants", invariants},
  };

  fs::remove_all(ctx.out_dir);
  int failures = 0, run = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    Outcome o;
    try {
      o = criteria[i].second(ctx);
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    ++run;
    if (!o.pass) ++failures;
    std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", run - failures, run);
  return failures == 0 ? 0 : 1;
}
