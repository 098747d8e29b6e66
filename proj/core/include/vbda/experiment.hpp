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

// Experiment specs, config files and the multi-seed runners behind the CLI.
//
// Config files are flat `key = value` lines with `#` comments. Keys carry a
// section prefix (data., digits., train., output.). Parsing is strict:
// unknown keys, duplicate keys, malformed values and lambda weights that the
// chosen method does not allow are all errors.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vbda/data.hpp"
#include "vbda/training.hpp"

namespace vbda {

enum class Method { kSourceOnly, kDann, kDannCe, kVibOnly, kVbda };
enum class Task { kNuisance, kMoons, kDigits };

std::string_view method_name(Method m);
std::optional<Method> parse_method(std::string_view s);
std::string_view task_name(Task t);
std::optional<Task> parse_task(std::string_view s);

/// Which lambda weights a method may set to a non-zero value.
struct AllowedWeights {
  bool lambda_d = false;
  bool lambda_ce = false;
  bool lambda_s = false;
  bool lambda_t = false;
};
AllowedWeights allowed_weights(Method m);

struct DigitsSpec {
  std::filesystem::path source_images;
  std::filesystem::path source_labels;
  std::filesystem::path target_images;
  std::filesystem::path target_labels;
  bool downsample = true;
  std::size_t limit = 2000;

  friend bool operator==(const DigitsSpec&, const DigitsSpec&) = default;
};

struct ExperimentSpec {
  std::string name = "experiment";
  Method method = Method::kVbda;
  Task task = Task::kNuisance;
  SyntheticSpec synthetic;
  DigitsSpec digits;
  TrainConfig train;  // train.seed is overwritten per run
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::filesystem::path output_dir = "out";
  bool record_time = false;

  friend bool operator==(const ExperimentSpec&, const ExperimentSpec&) = default;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

/// Defaults for a method/task pair before any config keys are applied.
ExperimentSpec default_spec(Method method, Task task);

ExperimentSpec parse_config(std::string_view text, std::string_view origin = "<config>");
ExperimentSpec parse_config_file(const std::filesystem::path& path);

/// Applies `key=value` overrides with the same strictness as the file parser.
void apply_overrides(ExperimentSpec& spec, const std::vector<std::string>& overrides);

/// Method/lambda consistency and value ranges; throws ParseError.
void validate(const ExperimentSpec& spec);

/// Every key with its resolved value; parse_config(serialize(s)) == s.
std::string serialize(const ExperimentSpec& spec);

/// Documented defaults for --print-defaults.
std::string describe_defaults();

DomainPair load_task_data(const ExperimentSpec& spec);

struct SeedResult {
  std::uint64_t seed = 0;
  double tgt_acc = 0.0;
  double src_acc = 0.0;
  std::filesystem::path metrics_csv;
  std::vector<MetricsRecord> metrics;
};

struct ExperimentSummary {
  std::string name;
  Method method = Method::kVbda;
  std::vector<SeedResult> per_seed;
  double mean = 0.0;  // target accuracy
  double std = 0.0;   // sample standard deviation, 0 for one seed
  std::filesystem::path summary_json;
};

/// Fixed metrics CSV header.
std::string_view metrics_csv_header();
void write_metrics_csv(std::ostream& out, const std::vector<MetricsRecord>& rows,
                       bool record_time);

double mean_of(const std::vector<double>& v);
double sample_std(const std::vector<double>& v);

/// Trains one model per seed. Writes <name>.resolved.cfg before training
/// (failing early on an unwritable directory), then <name>_seed<N>.csv and
/// <name>_seed<N>.ckpt per seed and <name>_summary.json.
ExperimentSummary run_experiment(const ExperimentSpec& spec);
/// Same, reusing already loaded data.
ExperimentSummary run_experiment(const ExperimentSpec& spec, const DomainPair& data);

enum class SweepParam { kLambdaS, kLambdaT, kLambdaCe };
std::optional<SweepParam> parse_sweep_param(std::string_view s);
std::string_view sweep_param_name(SweepParam p);

struct SweepRow {
  double value = 0.0;
  ExperimentSummary summary;
};

/// One experiment per value; writes <name>_sweep_<param>.csv with columns
/// value, mean_tgt_acc, std_tgt_acc, then one tgt_acc column per seed.
std::vector<SweepRow> run_sweep(const ExperimentSpec& base, SweepParam param,
                                const std::vector<double>& values);

/// Source-only, DANN, DANN+CE, bottleneck-only and VBDA on the nuisance task
/// with the committed defaults. Writes baselines.csv.
std::vector<ExperimentSummary> run_baseline_suite(const std::filesystem::path& out_dir,
                                                  const std::vector<std::uint64_t>& seeds);

/// Digits-proxy specs pointing at IDX files in `data_dir`.
ExperimentSpec digits_spec(Method method, const std::filesystem::path& data_dir);

}  // namespace vbda
