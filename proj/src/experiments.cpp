/* Copyright 2026 The HatCL Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "hatcl/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <mutex>
#include <sstream>
#include <thread>

#include "hatcl/checkpoint.hpp"
#include "hatcl/errors.hpp"

namespace hatcl {

std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::kToyInit: return "toy-init";
    case Experiment::kContinual: return "continual";
    case Experiment::kForget: return "forget";
  }
  return "?";
}

Experiment parse_experiment(const std::string& text) {
  if (text == "toy-init") return Experiment::kToyInit;
  if (text == "continual") return Experiment::kContinual;
  if (text == "forget") return Experiment::kForget;
  throw ValidationError("unknown experiment '" + text + "'");
}

std::string to_string(ToyStrategy s) {
  switch (s) {
    case ToyStrategy::kBoth: return "both";
    case ToyStrategy::kOriginal: return "original";
    case ToyStrategy::kHatCl: return "hat-cl";
    case ToyStrategy::kCustom: return "custom";
  }
  return "?";
}

ToyStrategy parse_toy_strategy(const std::string& text) {
  if (text == "both") return ToyStrategy::kBoth;
  if (text == "original") return ToyStrategy::kOriginal;
  if (text == "hat-cl") return ToyStrategy::kHatCl;
  if (text == "custom") return ToyStrategy::kCustom;
  throw ValidationError("unknown toy strategy '" + text +
                        "' (expected both|original|hat-cl|custom)");
}

namespace {

std::size_t parse_size(const std::string& key, const std::string& text) {
  std::size_t v = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || end != text.data() + text.size()) {
    throw ValidationError(key + ": expected a non-negative integer, got '" + text + "'");
  }
  return v;
}

double parse_real(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw ValidationError(key + ": expected a number, got '" + text + "'");
}

std::vector<std::size_t> parse_sizes(const std::string& key, const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(parse_size(key, item));
  if (out.empty()) throw ValidationError(key + ": expected a comma-separated list");
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string real_text(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

ExperimentConfig ExperimentConfig::defaults_for(Experiment e) {
  ExperimentConfig cfg;
  cfg.experiment = e;
  if (e == Experiment::kToyInit) {
    // An even batch count per epoch lets the cosine schedule reach s_min.
    cfg.repeats = 100;
    cfg.tasks = 3;
    cfg.lambda = 0.5;
    cfg.learning_rate = 0.2;
    cfg.epochs = 1;
    cfg.batch_size = 64;
    cfg.hidden = {16};
    cfg.dims = kToyFeatures;
    cfg.train_samples = 256;
    cfg.test_samples = 0;
  }
  return cfg;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  if (key == "experiment") experiment = parse_experiment(value);
  else if (key == "seed") seed = parse_size(key, value);
  else if (key == "repeats") repeats = parse_size(key, value);
  else if (key == "tasks") tasks = parse_size(key, value);
  else if (key == "s_max") max_scale = parse_real(key, value);
  else if (key == "schedule") schedule = parse_schedule_kind(value);
  else if (key == "init") init = parse_embedding_init(value);
  else if (key == "lambda") lambda = parse_real(key, value);
  else if (key == "lr") learning_rate = parse_real(key, value);
  else if (key == "momentum") momentum = parse_real(key, value);
  else if (key == "epochs") epochs = parse_size(key, value);
  else if (key == "batch_size") batch_size = parse_size(key, value);
  else if (key == "hidden") hidden = parse_sizes(key, value);
  else if (key == "dims") dims = parse_size(key, value);
  else if (key == "train_samples") train_samples = parse_size(key, value);
  else if (key == "test_samples") test_samples = parse_size(key, value);
  else if (key == "separation") separation = parse_real(key, value);
  else if (key == "centre_spread") centre_spread = parse_real(key, value);
  else if (key == "noise") noise = parse_real(key, value);
  else if (key == "strategy") strategy = parse_toy_strategy(value);
  else if (key == "max_batches") max_batches = parse_size(key, value);
  else if (key == "theta_hi") theta_hi = parse_real(key, value);
  else if (key == "theta_lo") theta_lo = parse_real(key, value);
  else if (key == "jobs") jobs = parse_size(key, value);
  else if (key == "forget_task") forget_task = parse_size(key, value);
  else if (key == "out") out = value;
  else if (key == "checkpoint") checkpoint = value;
  else throw ValidationError("unknown config key '" + key + "'");
}

void ExperimentConfig::apply_text(const std::string& text) {
  std::stringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("config line " + std::to_string(lineno) +
                            ": expected key=value");
    }
    set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

std::string ExperimentConfig::to_text() const {
  std::ostringstream o;
  std::string hidden_text;
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    hidden_text += (i ? "," : "") + std::to_string(hidden[i]);
  }
  o << "experiment=" << to_string(experiment) << "\n"
    << "seed=" << seed << "\n"
    << "repeats=" << repeats << "\n"
    << "tasks=" << tasks << "\n"
    << "s_max=" << real_text(max_scale) << "\n"
    << "schedule=" << to_string(schedule) << "\n"
    << "init=" << to_string(init) << "\n"
    << "lambda=" << real_text(lambda) << "\n"
    << "lr=" << real_text(learning_rate) << "\n"
    << "momentum=" << real_text(momentum) << "\n"
    << "epochs=" << epochs << "\n"
    << "batch_size=" << batch_size << "\n"
    << "hidden=" << hidden_text << "\n"
    << "dims=" << dims << "\n"
    << "train_samples=" << train_samples << "\n"
    << "test_samples=" << test_samples << "\n"
    << "separation=" << real_text(separation) << "\n"
    << "centre_spread=" << real_text(centre_spread) << "\n"
    << "noise=" << real_text(noise) << "\n"
    << "strategy=" << to_string(strategy) << "\n"
    << "max_batches=" << max_batches << "\n"
    << "theta_hi=" << real_text(theta_hi) << "\n"
    << "theta_lo=" << real_text(theta_lo) << "\n"
    << "jobs=" << jobs << "\n"
    << "forget_task=" << forget_task << "\n"
    << "out=" << out << "\n"
    << "checkpoint=" << checkpoint << "\n";
  return o.str();
}

std::string ExperimentConfig::checkpoint_path() const {
  if (!checkpoint.empty()) return checkpoint;
  return (std::filesystem::path(out) / "continual.ckpt").string();
}

TrainerConfig ExperimentConfig::trainer_config() const {
  TrainerConfig tc;
  tc.task_count = tasks;
  tc.max_scale = max_scale;
  tc.schedule = schedule;
  tc.init = init;
  tc.learning_rate = learning_rate;
  tc.momentum = momentum;
  tc.lambda = lambda;
  tc.epochs = epochs;
  tc.batch_size = batch_size;
  tc.seed = seed;
  return tc;
}

void ExperimentConfig::validate() const {
  if (repeats < 1) throw ValidationError("repeats must be >= 1");
  if (hidden.empty()) throw ValidationError("hidden needs at least one layer");
  for (std::size_t h : hidden) {
    if (h == 0) throw ValidationError("hidden layer widths must be positive");
  }
  if (train_samples == 0) throw ValidationError("train_samples must be positive");
  if (experiment != Experiment::kToyInit && test_samples == 0) {
    throw ValidationError("test_samples must be positive");
  }
  if (dims == 0) throw ValidationError("dims must be positive");
  if (max_batches == 0) throw ValidationError("max_batches must be positive");
  if (!(theta_lo < theta_hi)) throw ValidationError("theta_lo must be below theta_hi");
  if (forget_task >= tasks) throw ValidationError("forget_task must be below tasks");
  trainer_config().validate();
}

ExperimentConfig parse_config_text(Experiment e, const std::string& text) {
  ExperimentConfig cfg = ExperimentConfig::defaults_for(e);
  cfg.apply_text(text);
  return cfg;
}

// ---------------------------------------------------------------------------
// toy-init

namespace {

bool gate_settled(const HATMasker& gate, const ExperimentConfig& cfg) {
  const std::vector<double> a = gate.mask_at_max_scale(0);
  for (std::size_t f = 0; f < a.size(); ++f) {
    if (f < kToyUsefulFeatures ? !(a[f] > cfg.theta_hi) : !(a[f] < cfg.theta_lo)) {
      return false;
    }
  }
  return true;
}

}  // namespace

ToyRecord run_toy_repeat(const ExperimentConfig& cfg, std::size_t repeat,
                         const std::string& strategy, EmbeddingInit init,
                         ScheduleKind schedule) {
  const std::uint64_t seed = cfg.seed + repeat;
  ToyDataSpec dspec;
  dspec.samples = cfg.train_samples;
  dspec.noise = cfg.noise;
  const Dataset data = make_toy_dataset(dspec, seed);

  MlpSpec spec;
  spec.inputs = kToyFeatures;
  spec.hidden = cfg.hidden;
  spec.classes = 2;
  spec.tasks = cfg.tasks;
  spec.max_scale = cfg.max_scale;
  spec.input_gate = true;
  std::mt19937_64 rng(seed);
  HatMlp net(spec, rng);
  init_embeddings(net, init, rng);

  TrainerConfig tc = cfg.trainer_config();
  tc.seed = seed;
  tc.init = init;
  tc.schedule = schedule;
  const std::size_t per_epoch = (data.size() + tc.batch_size - 1) / tc.batch_size;
  tc.epochs = (cfg.max_batches + per_epoch - 1) / per_epoch;

  ToyRecord record{repeat, strategy, 0, false};
  const HATMasker& gate = net.gate()->masker();
  if (gate_settled(gate, cfg)) {
    record.completed = true;
    return record;
  }
  Trainer trainer(net, tc);
  const TaskMetrics m = trainer.train_task(data, 0, [&](std::size_t batches) {
    if (gate_settled(gate, cfg)) {
      record.completed = true;
      return false;
    }
    return batches < cfg.max_batches;
  });
  record.batches = m.batches;
  return record;
}

ToyResult run_toy_init(const ExperimentConfig& cfg) {
  cfg.validate();
  struct Arm {
    std::string name;
    EmbeddingInit init;
    ScheduleKind schedule;
  };
  std::vector<Arm> arms;
  const Arm original{kOriginalStrategy, EmbeddingInit::kGaussian, ScheduleKind::kLinear};
  const Arm hatcl{kHatClStrategy, EmbeddingInit::kOnes, ScheduleKind::kCosine};
  switch (cfg.strategy) {
    case ToyStrategy::kBoth: arms = {original, hatcl}; break;
    case ToyStrategy::kOriginal: arms = {original}; break;
    case ToyStrategy::kHatCl: arms = {hatcl}; break;
    case ToyStrategy::kCustom:
      arms = {{to_string(cfg.init) + "+" + to_string(cfg.schedule), cfg.init,
               cfg.schedule}};
      break;
  }

  const std::size_t jobs_total = cfg.repeats * arms.size();
  std::vector<ToyRecord> records(jobs_total);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < jobs_total;) {
      const std::size_t repeat = k / arms.size();
      const Arm& arm = arms[k % arms.size()];
      try {
        records[k] = run_toy_repeat(cfg, repeat, arm.name, arm.init, arm.schedule);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::size_t jobs = cfg.jobs ? cfg.jobs : std::thread::hardware_concurrency();
  jobs = std::clamp<std::size_t>(jobs, 1, jobs_total);
  std::vector<std::thread> pool;
  for (std::size_t j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  ToyResult result;
  result.records = std::move(records);
  result.summary = summarize_toy(result.records);
  return result;
}

// ---------------------------------------------------------------------------
// continual / forget

std::unique_ptr<HatMlp> build_continual_network(const ExperimentConfig& cfg) {
  MlpSpec spec;
  spec.inputs = cfg.dims;
  spec.hidden = cfg.hidden;
  spec.classes = 2;
  spec.tasks = cfg.tasks;
  spec.max_scale = cfg.max_scale;
  std::mt19937_64 rng(cfg.seed);
  auto net = std::make_unique<HatMlp>(spec, rng);
  init_embeddings(*net, cfg.init, rng);
  return net;
}

std::vector<TaskSplit> build_continual_tasks(const ExperimentConfig& cfg) {
  ClusterTaskSpec spec;
  spec.tasks = cfg.tasks;
  spec.dims = cfg.dims;
  spec.train_samples = cfg.train_samples;
  spec.test_samples = cfg.test_samples;
  spec.separation = cfg.separation;
  spec.centre_spread = cfg.centre_spread;
  // Offset so data and weights do not share a stream.
  return make_cluster_tasks(spec, cfg.seed + 0x9E3779B97F4A7C15ULL);
}

namespace {

Tensor matrix_tensor(const AccuracyMatrix& m) {
  Tensor t({m.tasks(), m.tasks()});
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c <= r; ++c) t[r * m.tasks() + c] = m.at(r, c);
  }
  return t;
}

AccuracyMatrix matrix_from_tensor(const Tensor& t) {
  if (t.rank() != 2 || t.dim(0) != t.dim(1)) {
    throw IoError("checkpoint accuracy matrix is not square");
  }
  AccuracyMatrix m(t.dim(0));
  for (std::size_t r = 0; r < t.dim(0); ++r) {
    std::vector<double> row;
    for (std::size_t c = 0; c <= r; ++c) row.push_back(t[r * t.dim(0) + c]);
    m.add_row(std::move(row));
  }
  return m;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir + "': " + ec.message());
}

std::string in_out(const ExperimentConfig& cfg, const std::string& file) {
  return (std::filesystem::path(cfg.out) / file).string();
}

}  // namespace

ContinualResult run_continual(const ExperimentConfig& cfg) {
  cfg.validate();
  auto net = build_continual_network(cfg);
  const std::vector<TaskSplit> tasks = build_continual_tasks(cfg);
  Trainer trainer(*net, cfg.trainer_config());

  ContinualResult result{AccuracyMatrix(cfg.tasks)};
  for (TaskId t = 0; t < cfg.tasks; ++t) {
    trainer.train_task(tasks[t].train, t);
    std::vector<double> row;
    for (TaskId c = 0; c <= t; ++c) row.push_back(evaluate(*net, tasks[c].test, c));
    result.matrix.add_row(std::move(row));
  }

  Checkpoint ckpt;
  ckpt.add_text("config", cfg.to_text());
  ckpt.add_tensor("results.accuracy", matrix_tensor(result.matrix));
  save_network(*net, ckpt);
  const std::string path = cfg.checkpoint_path();
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) ensure_dir(parent.string());
  ckpt.save(path);
  return result;
}

ForgetResult run_forget(const ExperimentConfig& cfg) {
  const std::string path = cfg.checkpoint_path();
  if (!std::filesystem::exists(path)) {
    throw UsageError("checkpoint '" + path + "' not found; run `continual` first");
  }
  const Checkpoint ckpt = Checkpoint::load(path);
  const ExperimentConfig trained =
      parse_config_text(Experiment::kContinual, ckpt.text("config"));
  if (cfg.forget_task >= trained.tasks) {
    throw ValidationError("forget_task " + std::to_string(cfg.forget_task) +
                          " outside the checkpoint's " +
                          std::to_string(trained.tasks) + " tasks");
  }
  auto net = build_continual_network(trained);
  load_network(*net, ckpt);
  const std::vector<TaskSplit> tasks = build_continual_tasks(trained);

  ForgetResult result;
  result.matrix = matrix_from_tensor(ckpt.tensor("results.accuracy"));
  for (TaskId c = 0; c < trained.tasks; ++c) {
    result.before.push_back(evaluate(*net, tasks[c].test, c));
  }
  ForgetOptions options;
  options.init = cfg.init;
  options.seed = cfg.seed;
  result.report = forget_task(*net, cfg.forget_task, options);
  for (TaskId c = 0; c < trained.tasks; ++c) {
    result.after.push_back(evaluate(*net, tasks[c].test, c));
  }
  return result;
}

void write_toy_outputs(const ExperimentConfig& cfg, const ToyResult& result) {
  ensure_dir(cfg.out);
  write_file(in_out(cfg, "toy_metrics.csv"), toy_metrics_csv(result.records));
  write_file(in_out(cfg, "toy_summary.md"), toy_markdown(result.summary));
}

void write_continual_outputs(const ExperimentConfig& cfg,
                             const ContinualResult& result) {
  ensure_dir(cfg.out);
  write_file(in_out(cfg, "accuracy.csv"), accuracy_csv(result.matrix));
  write_file(in_out(cfg, "accuracy.md"), accuracy_markdown(result.matrix));
}

void write_forget_outputs(const ExperimentConfig& cfg, const ForgetResult& result) {
  ensure_dir(cfg.out);
  const std::string label = "forgot_" + std::to_string(cfg.forget_task);
  write_file(in_out(cfg, "forget.csv"), labelled_row_csv(label, result.after));
  LabelledRow row{"After Forgetting Task " + std::to_string(cfg.forget_task), {}};
  for (double a : result.after) row.accuracies.emplace_back(a);
  const std::vector<LabelledRow> extra{row};
  write_file(in_out(cfg, "forget.md"), accuracy_markdown(result.matrix, extra));
  write_file(in_out(cfg, "forget_report.txt"), format_report(result.report));
}

}  // namespace hatcl
