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

#include "vbda/experiment.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>

#include "json.hpp"

namespace vbda {

namespace {

// Committed defaults. Weights a method does not allow stay at zero.
constexpr double kDefaultLambdaD = 1.0;
constexpr double kDefaultLambdaCe = 0.1;
constexpr double kDefaultLambdaS = 0.1;
constexpr double kDefaultLambdaT = 0.01;

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw Error("cannot format number");
  return std::string(buf, end);
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

struct BadValue {
  std::string expected;
};

double to_double(std::string_view s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw BadValue{"a finite real number"};
  }
  return v;
}

std::uint64_t to_u64(std::string_view s) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw BadValue{"a non-negative integer"};
  }
  return v;
}

bool to_bool(std::string_view s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw BadValue{"true or false"};
}

std::vector<std::uint64_t> to_seed_list(std::string_view s) {
  std::vector<std::uint64_t> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto piece = trim(s.substr(start, comma == std::string_view::npos
                                                ? std::string_view::npos
                                                : comma - start));
    out.push_back(to_u64(piece));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (out.empty()) throw BadValue{"a comma-separated list of seeds"};
  return out;
}

std::string seed_list(const std::vector<std::uint64_t>& seeds) {
  std::string out;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(seeds[i]);
  }
  return out;
}

struct Field {
  std::string key;
  std::string doc;
  std::function<void(ExperimentSpec&, std::string_view)> set;
  std::function<std::string(const ExperimentSpec&)> get;
};

template <typename Member>
Field real_field(std::string key, std::string doc, Member member) {
  return Field{std::move(key), std::move(doc),
               [member](ExperimentSpec& s, std::string_view v) { member(s) = to_double(v); },
               [member](const ExperimentSpec& s) {
                 return format_double(member(const_cast<ExperimentSpec&>(s)));
               }};
}

template <typename Member>
Field count_field(std::string key, std::string doc, Member member) {
  return Field{std::move(key), std::move(doc),
               [member](ExperimentSpec& s, std::string_view v) {
                 member(s) = static_cast<std::remove_reference_t<decltype(member(s))>>(to_u64(v));
               },
               [member](const ExperimentSpec& s) {
                 return std::to_string(member(const_cast<ExperimentSpec&>(s)));
               }};
}

template <typename Member>
Field bool_field(std::string key, std::string doc, Member member) {
  return Field{std::move(key), std::move(doc),
               [member](ExperimentSpec& s, std::string_view v) { member(s) = to_bool(v); },
               [member](const ExperimentSpec& s) {
                 return std::string(member(const_cast<ExperimentSpec&>(s)) ? "true" : "false");
               }};
}

template <typename Member>
Field path_field(std::string key, std::string doc, Member member) {
  return Field{std::move(key), std::move(doc),
               [member](ExperimentSpec& s, std::string_view v) {
                 member(s) = std::filesystem::path(std::string(v));
               },
               [member](const ExperimentSpec& s) {
                 return member(const_cast<ExperimentSpec&>(s)).string();
               }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back(Field{"method", "source_only | dann | dann_ce | vib_only | vbda (required)",
                      [](ExperimentSpec& s, std::string_view v) {
                        auto m = parse_method(v);
                        if (!m) throw BadValue{"one of source_only, dann, dann_ce, vib_only, vbda"};
                        s.method = *m;
                      },
                      [](const ExperimentSpec& s) { return std::string(method_name(s.method)); }});
    f.push_back(Field{"task", "nuisance | moons | digits (required)",
                      [](ExperimentSpec& s, std::string_view v) {
                        auto t = parse_task(v);
                        if (!t) throw BadValue{"one of nuisance, moons, digits"};
                        s.task = *t;
                      },
                      [](const ExperimentSpec& s) { return std::string(task_name(s.task)); }});
    f.push_back(Field{"name", "prefix of every output file",
                      [](ExperimentSpec& s, std::string_view v) {
                        if (v.empty()) throw BadValue{"a non-empty name"};
                        s.name = std::string(v);
                      },
                      [](const ExperimentSpec& s) { return s.name; }});
    f.push_back(Field{"seeds", "comma-separated training seeds, one run each",
                      [](ExperimentSpec& s, std::string_view v) { s.seeds = to_seed_list(v); },
                      [](const ExperimentSpec& s) { return seed_list(s.seeds); }});

    f.push_back(count_field("data.n", "examples per domain (synthetic tasks)",
                            [](ExperimentSpec& s) -> auto& { return s.synthetic.n; }));
    f.push_back(count_field("data.classes", "number of classes K",
                            [](ExperimentSpec& s) -> auto& { return s.synthetic.classes; }));
    f.push_back(count_field("data.d_signal", "label-carrying dims (nuisance task)",
                            [](ExperimentSpec& s) -> auto& { return s.synthetic.d_signal; }));
    f.push_back(count_field("data.d_nuisance", "background-code dims (nuisance task)",
                            [](ExperimentSpec& s) -> auto& { return s.synthetic.d_nuisance; }));
    f.push_back(real_field("data.rho", "source label/background coupling in [0, 1]",
                           [](ExperimentSpec& s) -> auto& { return s.synthetic.rho; }));
    f.push_back(real_field("data.angle_deg", "target rotation (moons)",
                           [](ExperimentSpec& s) -> auto& { return s.synthetic.angle_deg; }));
    f.push_back(real_field("data.signal_radius", "radius of the class-mean circle",
                           [](ExperimentSpec& s) -> auto& { return s.synthetic.signal_radius; }));
    f.push_back(real_field("data.noise", "noise std of signal dims / moons",
                           [](ExperimentSpec& s) -> auto& { return s.synthetic.noise; }));
    f.push_back(real_field("data.nuisance_noise", "noise std of background dims",
                           [](ExperimentSpec& s) -> auto& { return s.synthetic.nuisance_noise; }));
    f.push_back(count_field("data.seed", "generator seed, shared by all runs",
                            [](ExperimentSpec& s) -> auto& { return s.synthetic.seed; }));

    f.push_back(path_field("digits.source_images", "IDX images of the source domain",
                           [](ExperimentSpec& s) -> auto& { return s.digits.source_images; }));
    f.push_back(path_field("digits.source_labels", "IDX labels of the source domain",
                           [](ExperimentSpec& s) -> auto& { return s.digits.source_labels; }));
    f.push_back(path_field("digits.target_images", "IDX images of the target domain",
                           [](ExperimentSpec& s) -> auto& { return s.digits.target_images; }));
    f.push_back(path_field("digits.target_labels", "IDX labels of the target domain (evaluation only)",
                           [](ExperimentSpec& s) -> auto& { return s.digits.target_labels; }));
    f.push_back(bool_field("digits.downsample", "area-average images to 16x16",
                           [](ExperimentSpec& s) -> auto& { return s.digits.downsample; }));
    f.push_back(count_field("digits.limit", "examples kept per domain (0 = all)",
                            [](ExperimentSpec& s) -> auto& { return s.digits.limit; }));

    f.push_back(real_field("train.lambda_d", "adversarial weight (after warm-up)",
                           [](ExperimentSpec& s) -> auto& { return s.train.lambda_d; }));
    f.push_back(real_field("train.lambda_ce", "target conditional-entropy weight",
                           [](ExperimentSpec& s) -> auto& { return s.train.lambda_ce; }));
    f.push_back(real_field("train.lambda_s", "source bottleneck (KL) weight",
                           [](ExperimentSpec& s) -> auto& { return s.train.lambda_s; }));
    f.push_back(real_field("train.lambda_t", "target bottleneck (KL) weight",
                           [](ExperimentSpec& s) -> auto& { return s.train.lambda_t; }));
    f.push_back(count_field("train.steps", "optimizer steps",
                            [](ExperimentSpec& s) -> auto& { return s.train.steps; }));
    f.push_back(count_field("train.batch_source", "source examples per step",
                            [](ExperimentSpec& s) -> auto& { return s.train.batch_source; }));
    f.push_back(count_field("train.batch_target", "target examples per step",
                            [](ExperimentSpec& s) -> auto& { return s.train.batch_target; }));
    f.push_back(real_field("train.lr", "Adam learning rate",
                           [](ExperimentSpec& s) -> auto& { return s.train.lr; }));
    f.push_back(real_field("train.beta1", "Adam first-moment decay",
                           [](ExperimentSpec& s) -> auto& { return s.train.beta1; }));
    f.push_back(real_field("train.beta2", "Adam second-moment decay",
                           [](ExperimentSpec& s) -> auto& { return s.train.beta2; }));
    f.push_back(real_field("train.adam_eps", "Adam epsilon",
                           [](ExperimentSpec& s) -> auto& { return s.train.adam_eps; }));
    f.push_back(real_field("train.warmup", "fraction of steps over which lambda_d ramps from 0",
                           [](ExperimentSpec& s) -> auto& { return s.train.warmup; }));
    f.push_back(count_field("train.eval_every", "steps between metric records",
                            [](ExperimentSpec& s) -> auto& { return s.train.eval_every; }));
    f.push_back(count_field("train.hidden", "encoder hidden width",
                            [](ExperimentSpec& s) -> auto& { return s.train.hidden; }));
    f.push_back(count_field("train.latent_dim", "latent dimension d_z",
                            [](ExperimentSpec& s) -> auto& { return s.train.latent_dim; }));
    f.push_back(count_field("train.classifier_hidden", "classifier hidden width",
                            [](ExperimentSpec& s) -> auto& { return s.train.classifier_hidden; }));
    f.push_back(count_field("train.discriminator_hidden", "discriminator hidden width",
                            [](ExperimentSpec& s) -> auto& { return s.train.discriminator_hidden; }));
    f.push_back(bool_field("train.sample_eval", "evaluate with sampled z instead of the posterior mean",
                           [](ExperimentSpec& s) -> auto& { return s.train.sample_eval; }));

    f.push_back(path_field("output.dir", "directory for CSV, JSON and checkpoints",
                           [](ExperimentSpec& s) -> auto& { return s.output_dir; }));
    f.push_back(bool_field("output.record_time", "write wall-clock ms (breaks byte-identical reruns)",
                           [](ExperimentSpec& s) -> auto& { return s.record_time; }));
    return f;
  }();
  return table;
}

const Field* find_field(std::string_view key) {
  for (const auto& f : fields()) {
    if (f.key == key) return &f;
  }
  return nullptr;
}

struct Entry {
  std::size_t line;
  std::string key;
  std::string value;
};

std::string where(std::string_view origin, std::size_t line) {
  return std::string(origin) + ":" + std::to_string(line);
}

void set_field(ExperimentSpec& spec, const Field& f, const Entry& e,
               std::string_view origin) {
  try {
    f.set(spec, e.value);
  } catch (const BadValue& bad) {
    throw ParseError(where(origin, e.line) + ": key '" + e.key + "' expects " +
                     bad.expected + ", got '" + e.value + "'");
  }
}

std::vector<Entry> split_entries(std::string_view text, std::string_view origin) {
  std::vector<Entry> entries;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    const std::string content = trim(raw);
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) {
      throw ParseError(where(origin, line) + ": expected key = value, got '" + content + "'");
    }
    Entry e{line, trim(std::string_view(content).substr(0, eq)),
            trim(std::string_view(content).substr(eq + 1))};
    if (e.key.empty()) throw ParseError(where(origin, line) + ": empty key");
    for (const auto& prev : entries) {
      if (prev.key == e.key) {
        throw ParseError(where(origin, line) + ": duplicate key '" + e.key +
                         "' (first set on line " + std::to_string(prev.line) + ")");
      }
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

void require_zero(const ExperimentSpec& s, bool allowed, double value,
                  std::string_view key) {
  if (!allowed && value != 0.0) {
    throw ParseError("method '" + std::string(method_name(s.method)) +
                     "' requires " + std::string(key) + " = 0, got " +
                     format_double(value));
  }
}

}  // namespace

std::string_view method_name(Method m) {
  switch (m) {
    case Method::kSourceOnly: return "source_only";
    case Method::kDann: return "dann";
    case Method::kDannCe: return "dann_ce";
    case Method::kVibOnly: return "vib_only";
    case Method::kVbda: return "vbda";
  }
  return "unknown";
}

std::optional<Method> parse_method(std::string_view s) {
  for (Method m : {Method::kSourceOnly, Method::kDann, Method::kDannCe,
                   Method::kVibOnly, Method::kVbda}) {
    if (method_name(m) == s) return m;
  }
  return std::nullopt;
}

std::string_view task_name(Task t) {
  switch (t) {
    case Task::kNuisance: return "nuisance";
    case Task::kMoons: return "moons";
    case Task::kDigits: return "digits";
  }
  return "unknown";
}

std::optional<Task> parse_task(std::string_view s) {
  for (Task t : {Task::kNuisance, Task::kMoons, Task::kDigits}) {
    if (task_name(t) == s) return t;
  }
  return std::nullopt;
}

AllowedWeights allowed_weights(Method m) {
  switch (m) {
    case Method::kSourceOnly: return {false, false, false, false};
    case Method::kDann: return {true, false, false, false};
    case Method::kDannCe: return {true, true, false, false};
    case Method::kVibOnly: return {false, false, true, true};
    case Method::kVbda: return {true, true, true, true};
  }
  return {};
}

ExperimentSpec default_spec(Method method, Task task) {
  ExperimentSpec s;
  s.method = method;
  s.task = task;
  s.name = std::string(method_name(method));
  if (task == Task::kMoons) {
    s.synthetic.kind = TaskKind::kRotatedMoons;
    s.synthetic.noise = 0.1;
  }
  s.train.steps = task == Task::kDigits ? 1000 : 1500;
  const AllowedWeights allowed = allowed_weights(method);
  s.train.lambda_d = allowed.lambda_d ? kDefaultLambdaD : 0.0;
  s.train.lambda_ce = allowed.lambda_ce ? kDefaultLambdaCe : 0.0;
  s.train.lambda_s = allowed.lambda_s ? kDefaultLambdaS : 0.0;
  s.train.lambda_t = allowed.lambda_t ? kDefaultLambdaT : 0.0;
  return s;
}

void validate(const ExperimentSpec& s) {
  const AllowedWeights allowed = allowed_weights(s.method);
  require_zero(s, allowed.lambda_d, s.train.lambda_d, "train.lambda_d");
  require_zero(s, allowed.lambda_ce, s.train.lambda_ce, "train.lambda_ce");
  require_zero(s, allowed.lambda_s, s.train.lambda_s, "train.lambda_s");
  require_zero(s, allowed.lambda_t, s.train.lambda_t, "train.lambda_t");
  try {
    s.train.validate();
  } catch (const ContractError& e) {
    throw ParseError(e.what());
  }
  if (s.seeds.empty()) throw ParseError("seeds must not be empty");
  if (s.task == Task::kDigits) {
    if (s.digits.source_images.empty() || s.digits.source_labels.empty() ||
        s.digits.target_images.empty() || s.digits.target_labels.empty()) {
      throw ParseError("task 'digits' requires digits.source_images, "
                       "digits.source_labels, digits.target_images and "
                       "digits.target_labels");
    }
  } else {
    const bool moons = s.task == Task::kMoons;
    if ((s.synthetic.kind == TaskKind::kRotatedMoons) != moons) {
      throw ParseError("synthetic generator does not match task");
    }
    if (moons && s.synthetic.classes != 2) {
      throw ParseError("task 'moons' requires data.classes = 2");
    }
  }
}

ExperimentSpec parse_config(std::string_view text, std::string_view origin) {
  const std::vector<Entry> entries = split_entries(text, origin);
  auto lookup = [&](std::string_view key) -> const Entry* {
    for (const auto& e : entries) {
      if (e.key == key) return &e;
    }
    return nullptr;
  };
  const Entry* method_entry = lookup("method");
  const Entry* task_entry = lookup("task");
  if (!method_entry) throw ParseError(std::string(origin) + ": missing required field 'method'");
  if (!task_entry) throw ParseError(std::string(origin) + ": missing required field 'task'");

  ExperimentSpec probe;
  set_field(probe, *find_field("method"), *method_entry, origin);
  set_field(probe, *find_field("task"), *task_entry, origin);
  ExperimentSpec spec = default_spec(probe.method, probe.task);

  for (const auto& e : entries) {
    const Field* f = find_field(e.key);
    if (!f) {
      throw ParseError(where(origin, e.line) + ": unknown key '" + e.key + "'");
    }
    set_field(spec, *f, e, origin);
  }
  validate(spec);
  return spec;
}

ExperimentSpec parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.string());
}

void apply_overrides(ExperimentSpec& spec, const std::vector<std::string>& overrides) {
  std::size_t n = 0;
  for (const auto& o : overrides) {
    ++n;
    const auto eq = o.find('=');
    if (eq == std::string::npos) {
      throw ParseError("override " + std::to_string(n) + ": expected key=value, got '" + o + "'");
    }
    Entry e{n, trim(std::string_view(o).substr(0, eq)),
            trim(std::string_view(o).substr(eq + 1))};
    if (e.key == "method" || e.key == "task") {
      throw ParseError("override: '" + e.key + "' can only be set in the config file");
    }
    const Field* f = find_field(e.key);
    if (!f) throw ParseError("override: unknown key '" + e.key + "'");
    set_field(spec, *f, e, "<override>");
  }
  validate(spec);
}

std::string serialize(const ExperimentSpec& spec) {
  std::string out;
  for (const auto& f : fields()) {
    out += f.key + " = " + f.get(spec) + "\n";
  }
  return out;
}

std::string describe_defaults() {
  std::ostringstream os;
  os << "# Defaults shown for method = vbda, task = nuisance.\n"
     << "# Lambda weights a method does not allow default to 0 and may not be set:\n"
     << "#   source_only: none   dann: lambda_d   dann_ce: lambda_d, lambda_ce\n"
     << "#   vib_only: lambda_s, lambda_t   vbda: all four\n"
     << "# Task moons defaults data.noise to 0.1.\n\n";
  const ExperimentSpec s = default_spec(Method::kVbda, Task::kNuisance);
  for (const auto& f : fields()) {
    os << "# " << f.doc << "\n" << f.key << " = " << f.get(s) << "\n";
  }
  return os.str();
}

DomainPair load_task_data(const ExperimentSpec& spec) {
  if (spec.task != Task::kDigits) return generate_task(spec.synthetic);
  const DigitsSpec& d = spec.digits;
  Dataset source = load_idx(d.source_images, d.source_labels, d.downsample, d.limit);
  Dataset target = load_idx(d.target_images, d.target_labels, d.downsample, d.limit);
  if (source.dim() != target.dim()) {
    throw DimensionError("digits: source width " + std::to_string(source.dim()) +
                         " differs from target width " + std::to_string(target.dim()));
  }
  return DomainPair{std::move(source), TargetDomain(std::move(target))};
}

std::string_view metrics_csv_header() {
  return "step,l_cls,l_adv,l_ce,kl_s,kl_t,total,i_u_s,i_u_t,i_l_s,i_l_t_oracle,"
         "src_acc,tgt_acc,ms";
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRecord>& rows,
                       bool record_time) {
  out << metrics_csv_header() << '\n';
  for (const auto& r : rows) {
    const LossBreakdown& b = r.losses;
    out << r.step;
    for (double v : {b.l_cls, b.l_adv, b.l_ce, b.kl_s, b.kl_t, b.total, b.i_u_s,
                     b.i_u_t, b.i_l_s, r.i_l_t_oracle, r.src_acc, r.tgt_acc,
                     record_time ? r.ms : 0.0}) {
      out << ',' << format_double(v);
    }
    out << '\n';
  }
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

ExperimentSummary run_experiment(const ExperimentSpec& spec) {
  validate(spec);
  // Fail on an unwritable directory before loading data or training.
  std::error_code ec;
  std::filesystem::create_directories(spec.output_dir, ec);
  if (ec) {
    throw Error("cannot create output directory " + spec.output_dir.string() +
                ": " + ec.message());
  }
  write_text(spec.output_dir / (spec.name + ".resolved.cfg"), serialize(spec));
  return run_experiment(spec, load_task_data(spec));
}

ExperimentSummary run_experiment(const ExperimentSpec& spec, const DomainPair& data) {
  validate(spec);
  std::error_code ec;
  std::filesystem::create_directories(spec.output_dir, ec);
  if (ec) {
    throw Error("cannot create output directory " + spec.output_dir.string() +
                ": " + ec.message());
  }
  write_text(spec.output_dir / (spec.name + ".resolved.cfg"), serialize(spec));

  ExperimentSummary summary;
  summary.name = spec.name;
  summary.method = spec.method;
  std::vector<double> tgt;
  for (std::uint64_t seed : spec.seeds) {
    TrainConfig config = spec.train;
    config.seed = seed;
    TrainResult result = train(config, data);

    SeedResult r;
    r.seed = seed;
    const MetricsRecord final_record =
        result.metrics.empty() ? diagnose(result.params, data, config, 0)
                               : result.metrics.back();
    r.tgt_acc = final_record.tgt_acc;
    r.src_acc = final_record.src_acc;
    const std::string stem = spec.name + "_seed" + std::to_string(seed);
    r.metrics_csv = spec.output_dir / (stem + ".csv");
    {
      std::ostringstream csv;
      write_metrics_csv(csv, result.metrics, spec.record_time);
      write_text(r.metrics_csv, csv.str());
    }
    save_checkpoint(spec.output_dir / (stem + ".ckpt"), result.params);
    r.metrics = std::move(result.metrics);
    tgt.push_back(r.tgt_acc);
    summary.per_seed.push_back(std::move(r));
  }
  summary.mean = mean_of(tgt);
  summary.std = sample_std(tgt);

  nlohmann::ordered_json j;
  j["name"] = spec.name;
  j["method"] = std::string(method_name(spec.method));
  j["seeds"] = spec.seeds;
  j["per_seed"] = nlohmann::ordered_json::array();
  for (const auto& r : summary.per_seed) {
    nlohmann::ordered_json row;
    row["seed"] = r.seed;
    row["tgt_acc"] = r.tgt_acc;
    row["src_acc"] = r.src_acc;
    j["per_seed"].push_back(row);
  }
  j["mean"] = summary.mean;
  j["std"] = summary.std;
  summary.summary_json = spec.output_dir / (spec.name + "_summary.json");
  write_text(summary.summary_json, j.dump(2) + "\n");
  return summary;
}

std::optional<SweepParam> parse_sweep_param(std::string_view s) {
  if (s == "lambda_s" || s == "train.lambda_s" || s == "λ_s") return SweepParam::kLambdaS;
  if (s == "lambda_t" || s == "train.lambda_t" || s == "λ_t") return SweepParam::kLambdaT;
  if (s == "lambda_ce" || s == "train.lambda_ce" || s == "λ_ce") return SweepParam::kLambdaCe;
  return std::nullopt;
}

std::string_view sweep_param_name(SweepParam p) {
  switch (p) {
    case SweepParam::kLambdaS: return "lambda_s";
    case SweepParam::kLambdaT: return "lambda_t";
    case SweepParam::kLambdaCe: return "lambda_ce";
  }
  return "unknown";
}

std::vector<SweepRow> run_sweep(const ExperimentSpec& base, SweepParam param,
                                const std::vector<double>& values) {
  const AllowedWeights allowed = allowed_weights(base.method);
  const bool ok = (param == SweepParam::kLambdaS && allowed.lambda_s) ||
                  (param == SweepParam::kLambdaT && allowed.lambda_t) ||
                  (param == SweepParam::kLambdaCe && allowed.lambda_ce);
  if (!ok) {
    throw ContractError("method '" + std::string(method_name(base.method)) +
                        "' does not use " + std::string(sweep_param_name(param)));
  }
  if (values.empty()) throw ContractError("sweep needs at least one value");
  validate(base);
  const DomainPair data = load_task_data(base);

  std::vector<SweepRow> rows;
  for (double v : values) {
    ExperimentSpec s = base;
    switch (param) {
      case SweepParam::kLambdaS: s.train.lambda_s = v; break;
      case SweepParam::kLambdaT: s.train.lambda_t = v; break;
      case SweepParam::kLambdaCe: s.train.lambda_ce = v; break;
    }
    s.name = base.name + "_" + std::string(sweep_param_name(param)) + "_" + format_double(v);
    rows.push_back(SweepRow{v, run_experiment(s, data)});
  }

  std::ostringstream csv;
  csv << "value,mean_tgt_acc,std_tgt_acc";
  for (auto seed : base.seeds) csv << ",tgt_acc_seed" << seed;
  csv << '\n';
  for (const auto& row : rows) {
    csv << format_double(row.value) << ',' << format_double(row.summary.mean) << ','
        << format_double(row.summary.std);
    for (const auto& r : row.summary.per_seed) csv << ',' << format_double(r.tgt_acc);
    csv << '\n';
  }
  write_text(base.output_dir / (base.name + "_sweep_" +
                                std::string(sweep_param_name(param)) + ".csv"),
             csv.str());
  return rows;
}

std::vector<ExperimentSummary> run_baseline_suite(const std::filesystem::path& out_dir,
                                                  const std::vector<std::uint64_t>& seeds) {
  std::vector<ExperimentSummary> out;
  std::optional<DomainPair> data;
  for (Method m : {Method::kSourceOnly, Method::kDann, Method::kDannCe,
                   Method::kVibOnly, Method::kVbda}) {
    ExperimentSpec s = default_spec(m, Task::kNuisance);
    s.seeds = seeds;
    s.output_dir = out_dir;
    if (!data) data = load_task_data(s);
    out.push_back(run_experiment(s, *data));
  }
  std::ostringstream csv;
  csv << "method,mean_tgt_acc,std_tgt_acc,mean_src_acc\n";
  for (const auto& s : out) {
    std::vector<double> src;
    for (const auto& r : s.per_seed) src.push_back(r.src_acc);
    csv << method_name(s.method) << ',' << format_double(s.mean) << ','
        << format_double(s.std) << ',' << format_double(mean_of(src)) << '\n';
  }
  write_text(out_dir / "baselines.csv", csv.str());
  return out;
}

ExperimentSpec digits_spec(Method method, const std::filesystem::path& data_dir) {
  ExperimentSpec s = default_spec(method, Task::kDigits);
  s.digits.source_images = data_dir / "mnist-images-idx3-ubyte";
  s.digits.source_labels = data_dir / "mnist-labels-idx1-ubyte";
  s.digits.target_images = data_dir / "usps-proxy-images-idx3-ubyte";
  s.digits.target_labels = data_dir / "usps-proxy-labels-idx1-ubyte";
  s.name = "digits_" + std::string(method_name(method));
  return s;
}

}  // namespace vbda
