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

// vbda: run experiments, sweeps and the baseline suite from the shell.
//
//   vbda --print-defaults
//   vbda run configs/vbda_nuisance.cfg --seed 0,1 --out out/
//   vbda sweep configs/vbda_digits.cfg --param lambda_s --values 1e-2,1e-3
//   vbda suite baselines --out out/

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vbda/experiment.hpp"

namespace {

struct CommonOptions {
  std::vector<std::uint64_t> seeds;
  std::string out;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--seed", o.seeds, "training seeds (comma list); replaces `seeds`")
      ->delimiter(',');
  cmd->add_option("--out", o.out, "output directory; replaces `output.dir`");
  cmd->add_option("--set", o.sets, "extra key=value override, may repeat");
}

vbda::ExperimentSpec load_spec(const std::string& path, const CommonOptions& o) {
  vbda::ExperimentSpec spec = vbda::parse_config_file(path);
  vbda::apply_overrides(spec, o.sets);
  if (!o.seeds.empty()) spec.seeds = o.seeds;
  if (!o.out.empty()) spec.output_dir = o.out;
  vbda::validate(spec);
  return spec;
}

void print_summary(const vbda::ExperimentSummary& s) {
  std::printf("%-24s", s.name.c_str());
  for (const auto& r : s.per_seed) {
    std::printf("  seed %llu: %.4f", static_cast<unsigned long long>(r.seed), r.tgt_acc);
  }
  std::printf("  | mean %.4f std %.4f\n", s.mean, s.std);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variational bottleneck domain adaptation experiments"};
  app.require_subcommand(0, 1);
  bool print_defaults = false;
  app.add_flag("--print-defaults", print_defaults, "print every config key with its default");

  CommonOptions run_opts;
  std::string run_config;
  CLI::App* run = app.add_subcommand("run", "train one config over its seeds");
  run->add_option("config", run_config, "config file")->required();
  add_common(run, run_opts);

  CommonOptions sweep_opts;
  std::string sweep_config;
  std::string sweep_param;
  std::vector<double> sweep_values;
  CLI::App* sweep = app.add_subcommand("sweep", "one experiment per value of a lambda weight");
  sweep->add_option("config", sweep_config, "config file")->required();
  sweep->add_option("--param", sweep_param, "lambda_s | lambda_t | lambda_ce")->required();
  sweep->add_option("--values", sweep_values, "comma list of values")
      ->required()
      ->delimiter(',');
  add_common(sweep, sweep_opts);

  CommonOptions suite_opts;
  std::string suite_name;
  std::string data_dir = "data/digits";
  CLI::App* suite = app.add_subcommand("suite", "predefined experiment suites");
  suite->add_option("name", suite_name, "baselines | digits")
      ->required()
      ->check(CLI::IsMember({"baselines", "digits"}));
  suite->add_option("--data", data_dir, "directory holding the digits IDX files");
  suite->add_option("--seed", suite_opts.seeds, "training seeds (comma list)")->delimiter(',');
  suite->add_option("--out", suite_opts.out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (print_defaults) {
      std::cout << vbda::describe_defaults();
      return 0;
    }
    if (*run) {
      print_summary(vbda::run_experiment(load_spec(run_config, run_opts)));
    } else if (*sweep) {
      const auto param = vbda::parse_sweep_param(sweep_param);
      if (!param) {
        std::cerr << "error: unknown sweep parameter '" << sweep_param << "'\n";
        return 2;
      }
      const vbda::ExperimentSpec base = load_spec(sweep_config, sweep_opts);
      for (const auto& row : vbda::run_sweep(base, *param, sweep_values)) {
        print_summary(row.summary);
      }
    } else if (*suite) {
      std::vector<std::uint64_t> seeds =
          suite_opts.seeds.empty() ? std::vector<std::uint64_t>{0, 1, 2, 3, 4} : suite_opts.seeds;
      const std::string out = suite_opts.out.empty() ? std::string("out") : suite_opts.out;
      if (suite_name == "baselines") {
        for (const auto& s : vbda::run_baseline_suite(out, seeds)) print_summary(s);
      } else {
        for (vbda::Method m : {vbda::Method::kSourceOnly, vbda::Method::kVbda}) {
          vbda::ExperimentSpec spec = vbda::digits_spec(m, data_dir);
          spec.seeds = seeds;
          spec.output_dir = out;
          print_summary(vbda::run_experiment(spec));
        }
      }
    } else {
      std::cout << app.help();
    }
  } catch (const vbda::ParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
