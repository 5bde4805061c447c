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

#include "hatcl/trainer.hpp"

#include <algorithm>
#include <numeric>

#include "hatcl/errors.hpp"

namespace hatcl {

void TrainerConfig::validate() const {
  if (task_count < 1) throw ValidationError("task_count must be >= 1");
  if (!(max_scale > 1.0)) throw ValidationError("s_max must be > 1");
  if (!(lambda >= 0.0)) throw ValidationError("lambda must be >= 0");
  if (!(learning_rate > 0.0)) throw ValidationError("learning rate must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw ValidationError("momentum must lie in [0, 1)");
  }
  if (epochs < 1) throw ValidationError("epochs must be >= 1");
  if (batch_size < 1) throw ValidationError("batch size must be >= 1");
}

Tensor Dataset::gather(std::span<const std::size_t> indices) const {
  const std::size_t row = inputs.numel() / std::max<std::size_t>(1, inputs.dim(0));
  Shape shape = inputs.shape();
  shape[0] = indices.size();
  std::vector<double> out;
  out.reserve(indices.size() * row);
  for (std::size_t i : indices) {
    auto begin = inputs.data().begin() + static_cast<std::ptrdiff_t>(i * row);
    out.insert(out.end(), begin, begin + static_cast<std::ptrdiff_t>(row));
  }
  return Tensor(std::move(shape), std::move(out));
}

std::vector<int> Dataset::gather_labels(std::span<const std::size_t> indices) const {
  std::vector<int> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(labels.at(i));
  return out;
}

double regularizer_value(std::span<const std::vector<double>> masks,
                         std::span<const std::vector<double>> cumulative,
                         std::size_t task_count) {
  if (masks.size() != cumulative.size()) {
    throw DimensionError("regularizer: " + std::to_string(masks.size()) +
                         " masks for " + std::to_string(cumulative.size()) +
                         " cumulative masks");
  }
  const double quota = 1.0 / static_cast<double>(task_count);
  double total = 0.0;
  for (std::size_t l = 0; l < masks.size(); ++l) {
    if (masks[l].size() != cumulative[l].size()) {
      throw DimensionError("regularizer: layer " + std::to_string(l) +
                           " mask and cumulative lengths differ");
    }
    double used = 0.0, free = 0.0;
    for (std::size_t i = 0; i < masks[l].size(); ++i) {
      used += masks[l][i] * (1.0 - cumulative[l][i]);
      free += 1.0 - cumulative[l][i];
    }
    if (free <= 0.0) continue;
    total += std::max(used / free - quota, 0.0);
  }
  return total;
}

Var regularizer(Tape& tape, std::span<const MaskUsage> layers,
                std::size_t task_count) {
  const double quota = 1.0 / static_cast<double>(task_count);
  Var total = tape.constant(Tensor::scalar(0.0));
  for (const MaskUsage& layer : layers) {
    if (layer.mask.value().numel() != layer.cumulative.size()) {
      throw DimensionError("regularizer: mask " +
                           shape_string(layer.mask.shape()) + " does not match " +
                           std::to_string(layer.cumulative.size()) +
                           " cumulative entries");
    }
    std::vector<double> free(layer.cumulative.size());
    double capacity = 0.0;
    for (std::size_t i = 0; i < free.size(); ++i) {
      free[i] = 1.0 - layer.cumulative[i];
      capacity += free[i];
    }
    if (capacity <= 0.0) continue;
    Var used = sum(mul(layer.mask, tape.constant(Tensor(layer.mask.shape(), free))));
    Var excess = relu(shift(scale(used, 1.0 / capacity), -quota));
    total = add(total, excess);
  }
  return total;
}

std::vector<MaskUsage> mask_usages(const std::vector<MaskTrace>& chain) {
  std::vector<MaskUsage> out;
  std::vector<const HATMasker*> seen;
  for (const MaskTrace& trace : chain) {
    if (!trace.mask) continue;
    if (std::find(seen.begin(), seen.end(), trace.masker) != seen.end()) continue;
    seen.push_back(trace.masker);
    out.push_back({*trace.mask, trace.masker->cumulative_mask()});
  }
  return out;
}

SgdMomentum::SgdMomentum(std::vector<Parameter*> params, double learning_rate,
                         double momentum)
    : params_(std::move(params)), learning_rate_(learning_rate),
      momentum_(momentum) {
  velocity_.reserve(params_.size());
  for (Parameter* p : params_) velocity_.emplace_back(p->shape());
}

void SgdMomentum::step() {
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Parameter& p = *params_[k];
    Tensor& v = velocity_[k];
    const Tensor& g = p.grad();
    Tensor& w = p.value();
    for (std::size_t i = 0; i < w.numel(); ++i) {
      v[i] = momentum_ * v[i] + g[i];
      w[i] -= learning_rate_ * v[i];
    }
  }
}

void init_embeddings(Network& net, EmbeddingInit init, std::mt19937_64& rng) {
  for (HATMasker* m : net.maskers()) m->init_embeddings(init, rng);
}

Trainer::Trainer(Network& net, TrainerConfig config)
    : net_(net), config_(config) {
  config_.validate();
}

ScheduleState Trainer::schedule() const {
  return ScheduleState::make(config_.schedule, config_.max_scale);
}

void Trainer::begin_task(std::optional<TaskId> task) {
  if (task) {
    if (*task >= net_.task_count()) {
      throw std::out_of_range("task " + std::to_string(*task) + " outside [0," +
                              std::to_string(net_.task_count()) + ")");
    }
    for (HATMasker* m : net_.maskers()) {
      if (m->finalized(*task)) {
        throw StateError("task " + std::to_string(*task) + " is already finalized");
      }
    }
  }
  task_ = task;
  optimizer_.emplace(net_.parameters(), config_.learning_rate, config_.momentum);
  active_ = true;
}

StepResult Trainer::step(const Tensor& inputs, std::span<const int> labels,
                         std::optional<double> scale) {
  if (!active_) throw StateError("step called outside begin_task/end_task");
  Tape tape;
  net_.zero_grad();
  HATPayload out = net_.forward(
      HATPayload(tape.constant(inputs), task_, task_ ? scale : std::nullopt, true));
  Var logits = out.masked_data();
  Var loss = softmax_cross_entropy(logits, labels);
  if (task_ && config_.lambda > 0.0) {
    const std::vector<MaskUsage> usages = mask_usages(out.chain());
    loss = add(loss, hatcl::scale(regularizer(tape, usages, config_.task_count),
                                  config_.lambda));
  }
  tape.backward(loss);
  optimizer_->step();
  if (task_) {
    for (HATMasker* m : net_.maskers()) m->clamp_embedding(*task_);
  }

  StepResult result;
  result.loss = loss.value().item();
  const Tensor& z = logits.value();
  const std::size_t classes = z.dim(1);
  for (std::size_t b = 0; b < labels.size(); ++b) {
    const auto row = z.data().subspan(b * classes, classes);
    const auto best = std::max_element(row.begin(), row.end()) - row.begin();
    if (best == labels[b]) ++result.correct;
  }
  return result;
}

void Trainer::end_task() {
  if (!active_) throw StateError("end_task called without begin_task");
  if (task_) {
    for (HATMasker* m : net_.maskers()) m->finalize(*task_);
  }
  optimizer_.reset();
  active_ = false;
}

TaskMetrics Trainer::train_task(const Dataset& data, std::optional<TaskId> task,
                                const BatchCallback& on_batch) {
  if (data.size() == 0) throw ValidationError("train_task: empty dataset");
  begin_task(task);
  const ScheduleState sched = schedule();
  std::seed_seq seq{config_.seed, static_cast<std::uint64_t>(task.value_or(0)),
                    static_cast<std::uint64_t>(task.has_value())};
  std::mt19937_64 rng(seq);

  TaskMetrics metrics;
  std::vector<std::size_t> order(data.size());
  const std::size_t batches =
      (data.size() + config_.batch_size - 1) / config_.batch_size;
  for (std::size_t epoch = 0; epoch < config_.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t b = 1; b <= batches; ++b) {
      const std::size_t begin = (b - 1) * config_.batch_size;
      const std::size_t end = std::min(begin + config_.batch_size, data.size());
      const std::span<const std::size_t> idx(order.data() + begin, end - begin);
      const std::vector<int> labels = data.gather_labels(idx);
      const StepResult r = step(data.gather(idx), labels, sched.scale(b, batches));
      loss_sum += r.loss;
      correct += r.correct;
      ++metrics.batches;
      if (on_batch && !on_batch(metrics.batches)) {
        metrics.stopped_early = true;
        break;
      }
    }
    metrics.epochs.push_back({loss_sum / static_cast<double>(batches),
                              static_cast<double>(correct) /
                                  static_cast<double>(data.size())});
    if (metrics.stopped_early) break;
  }
  if (metrics.stopped_early) {
    optimizer_.reset();
    active_ = false;
  } else {
    end_task();
  }
  return metrics;
}

std::vector<int> predict(Network& net, const Tensor& inputs,
                         std::optional<TaskId> task) {
  Tape tape;
  HATPayload out =
      net.forward(HATPayload(tape.constant(inputs), task, std::nullopt, false));
  const Tensor& z = out.masked_data().value();
  const std::size_t classes = z.dim(1);
  std::vector<int> labels(z.dim(0));
  for (std::size_t b = 0; b < labels.size(); ++b) {
    const auto row = z.data().subspan(b * classes, classes);
    labels[b] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return labels;
}

double evaluate(Network& net, const Dataset& data, std::optional<TaskId> task) {
  if (data.size() == 0) return 0.0;
  const std::vector<int> predicted = predict(net, data.inputs, task);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i] == data.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace hatcl
