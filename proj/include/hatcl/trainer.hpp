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

#ifndef HATCL_TRAINER_HPP_
#define HATCL_TRAINER_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "hatcl/network.hpp"
#include "hatcl/schedule.hpp"

namespace hatcl {

struct TrainerConfig {
  std::size_t task_count = 1;
  double max_scale = kDefaultMaxScale;
  ScheduleKind schedule = ScheduleKind::kCosine;
  EmbeddingInit init = EmbeddingInit::kOnes;
  double learning_rate = 0.05;
  double momentum = 0.9;
  double lambda = 0.1;
  std::size_t epochs = 1;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;

  // Throws ValidationError on out-of-domain fields.
  void validate() const;
};

struct Dataset {
  Tensor inputs;  // [N, ...]
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  // Rows `indices` of the inputs, in order.
  Tensor gather(std::span<const std::size_t> indices) const;
  std::vector<int> gather_labels(std::span<const std::size_t> indices) const;
};

// ---------------------------------------------------------------------------
// Quota regularizer.

// One layer's current-task mask on the tape and its a^{<t} (held constant).
struct MaskUsage {
  Var mask;
  std::vector<double> cumulative;
};

// R_t = sum_l max(sum_i a_i (1 - c_i) / sum_i (1 - c_i) - 1/T, 0). Layers with
// no free capacity contribute 0.
double regularizer_value(std::span<const std::vector<double>> masks,
                         std::span<const std::vector<double>> cumulative,
                         std::size_t task_count);
Var regularizer(Tape& tape, std::span<const MaskUsage> layers,
                std::size_t task_count);

// Usages of the first occurrence of each masker in `chain`.
std::vector<MaskUsage> mask_usages(const std::vector<MaskTrace>& chain);

// ---------------------------------------------------------------------------

class SgdMomentum {
 public:
  SgdMomentum(std::vector<Parameter*> params, double learning_rate,
              double momentum);
  void step();

 private:
  std::vector<Parameter*> params_;
  std::vector<Tensor> velocity_;
  double learning_rate_;
  double momentum_;
};

void init_embeddings(Network& net, EmbeddingInit init, std::mt19937_64& rng);

struct EpochMetrics {
  double loss = 0.0;
  double accuracy = 0.0;
};

struct TaskMetrics {
  std::vector<EpochMetrics> epochs;
  std::size_t batches = 0;
  bool stopped_early = false;
};

struct StepResult {
  double loss = 0.0;
  std::size_t correct = 0;
};

// Called after every batch with the number of batches run so far; returning
// false ends training early.
using BatchCallback = std::function<bool(std::size_t)>;

/// Sequential-task trainer: SGD with momentum, cross-entropy plus the quota
/// regularizer, the mask-scale schedule over each epoch, and the gradient
/// hooks installed by the HAT layers.
class Trainer {
 public:
  Trainer(Network& net, TrainerConfig config);

  // Starts a task; a fresh optimizer state is created per task. Throws
  // StateError if t is already finalized.
  void begin_task(std::optional<TaskId> task);
  StepResult step(const Tensor& inputs, std::span<const int> labels,
                  std::optional<double> scale);
  // Finalizes every masker for the current task.
  void end_task();

  // Runs cfg.epochs epochs of shuffled mini-batches and finalizes the task
  // unless the callback stopped training early.
  TaskMetrics train_task(const Dataset& data, std::optional<TaskId> task,
                         const BatchCallback& on_batch = {});

  const TrainerConfig& config() const { return config_; }
  ScheduleState schedule() const;

 private:
  Network& net_;
  TrainerConfig config_;
  std::optional<TaskId> task_;
  std::optional<SgdMomentum> optimizer_;
  bool active_ = false;
};

std::vector<int> predict(Network& net, const Tensor& inputs,
                         std::optional<TaskId> task);
// Fraction correct at s = s_max with no hooks and no parameter updates.
double evaluate(Network& net, const Dataset& data, std::optional<TaskId> task);

}  // namespace hatcl

#endif  // HATCL_TRAINER_HPP_
