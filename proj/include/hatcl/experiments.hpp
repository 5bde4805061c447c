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

#ifndef HATCL_EXPERIMENTS_HPP_
#define HATCL_EXPERIMENTS_HPP_

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "hatcl/data.hpp"
#include "hatcl/forgetting.hpp"
#include "hatcl/report.hpp"
#include "hatcl/trainer.hpp"

namespace hatcl {

enum class Experiment { kToyInit, kContinual, kForget };

std::string to_string(Experiment e);
Experiment parse_experiment(const std::string& text);

// Which embedding-init/schedule pairs the toy experiment runs.
enum class ToyStrategy { kBoth, kOriginal, kHatCl, kCustom };

std::string to_string(ToyStrategy s);
ToyStrategy parse_toy_strategy(const std::string& text);

// Names recorded in the toy metrics CSV.
inline constexpr const char* kOriginalStrategy = "gaussian+linear";
inline constexpr const char* kHatClStrategy = "ones+cosine";

/// Every knob of the three bench commands. Defaults depend on the experiment;
/// see defaults_for().
struct ExperimentConfig {
  Experiment experiment = Experiment::kContinual;
  std::uint64_t seed = 0;
  std::size_t repeats = 1;

  // Trainer.
  std::size_t tasks = 5;
  double max_scale = kDefaultMaxScale;
  ScheduleKind schedule = ScheduleKind::kCosine;
  EmbeddingInit init = EmbeddingInit::kOnes;
  double lambda = 0.1;
  double learning_rate = 0.05;
  double momentum = 0.9;
  std::size_t epochs = 3;
  std::size_t batch_size = 32;

  // Network.
  std::vector<std::size_t> hidden{64, 64};

  // Data.
  std::size_t dims = 16;
  std::size_t train_samples = 1000;
  std::size_t test_samples = 400;
  double separation = 6.0;
  double centre_spread = 4.0;
  double noise = 0.1;

  // Toy experiment.
  ToyStrategy strategy = ToyStrategy::kBoth;
  std::size_t max_batches = 2000;
  double theta_hi = 0.9;
  double theta_lo = 0.1;
  // Worker threads for toy repeats; 0 picks the hardware concurrency.
  std::size_t jobs = 0;

  // Forgetting.
  TaskId forget_task = 0;

  // Outputs. An empty checkpoint path means <out>/continual.ckpt.
  std::string out = "results";
  std::string checkpoint;

  static ExperimentConfig defaults_for(Experiment e);

  // Sets one field from its key=value text form; throws ValidationError on an
  // unknown key or a malformed value.
  void set(const std::string& key, const std::string& value);
  // Applies a key=value file body; blank lines and '#' comments are skipped.
  void apply_text(const std::string& text);
  // Canonical key=value listing of every field.
  std::string to_text() const;

  std::string checkpoint_path() const;
  TrainerConfig trainer_config() const;
  void validate() const;
};

ExperimentConfig parse_config_text(Experiment e, const std::string& text);

// ---------------------------------------------------------------------------

// Trains a one-hidden-layer network whose input gate is the first masker and
// counts batches until the gate mask at s_max exceeds theta_hi on the useful
// features and falls below theta_lo on the rest.
ToyRecord run_toy_repeat(const ExperimentConfig& cfg, std::size_t repeat,
                         const std::string& strategy, EmbeddingInit init,
                         ScheduleKind schedule);

struct ToyResult {
  std::vector<ToyRecord> records;  // ordered by repeat, then strategy
  std::vector<ToySummary> summary;
};

ToyResult run_toy_init(const ExperimentConfig& cfg);

struct ContinualResult {
  AccuracyMatrix matrix;
};

std::unique_ptr<HatMlp> build_continual_network(const ExperimentConfig& cfg);
std::vector<TaskSplit> build_continual_tasks(const ExperimentConfig& cfg);

// Trains cfg.tasks tasks in order, evaluating every finished task after each,
// and saves the trained network with its config and matrix.
ContinualResult run_continual(const ExperimentConfig& cfg);

struct ForgetResult {
  AccuracyMatrix matrix;        // from the checkpoint
  std::vector<double> before;  // all tasks, freshly evaluated after loading
  std::vector<double> after;
  ForgetReport report;
};

// Throws UsageError when the checkpoint does not exist.
ForgetResult run_forget(const ExperimentConfig& cfg);

// Write the files a command produces into cfg.out.
void write_toy_outputs(const ExperimentConfig& cfg, const ToyResult& result);
void write_continual_outputs(const ExperimentConfig& cfg,
                             const ContinualResult& result);
void write_forget_outputs(const ExperimentConfig& cfg, const ForgetResult& result);

}  // namespace hatcl

#endif  // HATCL_EXPERIMENTS_HPP_
