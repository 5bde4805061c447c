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

#ifndef HATCL_LAYERS_HPP_
#define HATCL_LAYERS_HPP_

#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "hatcl/autograd.hpp"
#include "hatcl/errors.hpp"
#include "hatcl/masker.hpp"
#include "hatcl/payload.hpp"

namespace hatcl {

// Parameter or buffer addressed by its checkpoint name.
struct NamedTensor {
  std::string name;
  Tensor* tensor;
};

// ---------------------------------------------------------------------------
// Plain base modules.

class Linear {
 public:
  Linear(std::string tag, std::size_t in, std::size_t out, std::mt19937_64& rng);

  Var forward(Tape& tape, Var x, bool training = true);
  // x W^T + b with caller-provided weight and bias nodes.
  static Var apply(Var x, Var weight, Var bias);

  const std::string& tag() const { return tag_; }
  std::size_t in_features() const { return weight_.shape()[1]; }
  std::size_t out_features() const { return weight_.shape()[0]; }
  Parameter& weight() { return weight_; }
  Parameter& bias() { return bias_; }
  std::vector<Parameter*> parameters() { return {&weight_, &bias_}; }
  std::vector<NamedTensor> state();
  // Zeroes weight and bias.
  void clear();

 private:
  std::string tag_;
  Parameter weight_;
  Parameter bias_;
};

class Conv2d {
 public:
  Conv2d(std::string tag, std::size_t in_channels, std::size_t out_channels,
         std::size_t kernel, Conv2dOptions options, std::mt19937_64& rng);

  Var forward(Tape& tape, Var x, bool training = true);

  const std::string& tag() const { return tag_; }
  const Conv2dOptions& options() const { return options_; }
  Parameter& weight() { return weight_; }
  Parameter& bias() { return bias_; }
  std::vector<Parameter*> parameters() { return {&weight_, &bias_}; }
  std::vector<NamedTensor> state();
  void clear();

 private:
  std::string tag_;
  Conv2dOptions options_;
  Parameter weight_;
  Parameter bias_;
};

// Per-sample normalisation with a per-feature (axis 1) affine.
class LayerNorm {
 public:
  LayerNorm(std::string tag, std::size_t features, double eps = 1e-5);

  Var forward(Tape& tape, Var x, bool training);
  std::vector<Parameter*> parameters() { return {&gamma_, &beta_}; }
  std::vector<NamedTensor> state();
  // Back to gamma = 1, beta = 0.
  void clear();

 private:
  std::string tag_;
  double eps_;
  Parameter gamma_;
  Parameter beta_;
};

// Per-channel normalisation with batch statistics while training and running
// statistics otherwise.
class BatchNorm {
 public:
  BatchNorm(std::string tag, std::size_t channels, double momentum = 0.1,
            double eps = 1e-5);

  Var forward(Tape& tape, Var x, bool training);
  std::vector<Parameter*> parameters() { return {&gamma_, &beta_}; }
  std::vector<NamedTensor> state();
  const Tensor& running_mean() const { return running_mean_; }
  const Tensor& running_var() const { return running_var_; }
  void clear();

 private:
  std::string tag_;
  double momentum_;
  double eps_;
  Parameter gamma_;
  Parameter beta_;
  Tensor running_mean_;
  Tensor running_var_;
};

// ---------------------------------------------------------------------------
// HAT modules.

/// A weighted base layer paired with a masker over its output units.
///
/// `forward` reads the masked input, runs the base layer, and leaves the
/// output masker pending on the returned payload. In training mode with
/// t > 0 it hooks the weight and bias gradients with `grad_nullify`, pairing
/// this layer's cumulative mask with that of the last masker in the input's
/// chain.
class HatLayer {
 public:
  virtual ~HatLayer() = default;

  virtual HATPayload forward(HATPayload& input) = 0;
  virtual Parameter& weight() = 0;
  virtual Parameter& bias() = 0;
  virtual std::vector<NamedTensor> state() = 0;

  HATMasker& masker() { return masker_; }
  const HATMasker& masker() const { return masker_; }
  const std::string& tag() const { return masker_.tag(); }
  std::vector<Parameter*> parameters();

  // Cumulative mask of the units feeding weight axis 1, given the masker that
  // precedes this layer (null for a network input).
  std::vector<double> input_cumulative(const HATMasker* preceding) const;
  // Extent of weight axis 1 (input features or input channels).
  std::size_t fan_in() const { return fan_in_; }

 protected:
  HatLayer(std::string tag, std::size_t tasks, std::size_t features,
           std::size_t fan_in, double max_scale)
      : masker_(std::move(tag), tasks, features, max_scale), fan_in_(fan_in) {}

  // Registers the nullification hooks for `input`'s task, if any apply.
  void hook_gradients(const HATPayload& input, Var weight, Var bias);

 private:
  HATMasker masker_;
  std::size_t fan_in_;
};

class HATLinear : public HatLayer {
 public:
  HATLinear(std::string tag, std::size_t in, std::size_t out, std::size_t tasks,
            std::mt19937_64& rng, double max_scale = kDefaultMaxScale);

  HATPayload forward(HATPayload& input) override;
  Parameter& weight() override { return base_.weight(); }
  Parameter& bias() override { return base_.bias(); }
  std::vector<NamedTensor> state() override { return base_.state(); }
  Linear& base() { return base_; }

 private:
  Linear base_;
};

class HATConv2d : public HatLayer {
 public:
  HATConv2d(std::string tag, std::size_t in_channels, std::size_t out_channels,
            std::size_t kernel, Conv2dOptions options, std::size_t tasks,
            std::mt19937_64& rng, double max_scale = kDefaultMaxScale);

  HATPayload forward(HATPayload& input) override;
  Parameter& weight() override { return base_.weight(); }
  Parameter& bias() override { return base_.bias(); }
  std::vector<NamedTensor> state() override { return base_.state(); }
  Conv2d& base() { return base_; }

 private:
  Conv2d base_;
};

// A weightless masker over a network's input features.
class HATGate {
 public:
  HATGate(std::string tag, std::size_t features, std::size_t tasks,
          double max_scale = kDefaultMaxScale)
      : masker_(std::move(tag), tasks, features, max_scale) {}

  // Leaves the gate's masker pending on `input`.
  HATPayload forward(HATPayload& input);
  HATMasker& masker() { return masker_; }

 private:
  HATMasker masker_;
};

// ---------------------------------------------------------------------------
// Task-indexed modules.

class TaskIndexedBase {
 public:
  virtual ~TaskIndexedBase() = default;
  virtual const std::string& tag() const = 0;
  virtual std::size_t task_count() const = 0;
  virtual std::vector<Parameter*> task_parameters(TaskId t) = 0;
  // Returns submodule t to a state that carries no task knowledge.
  virtual void clear(TaskId t) = 0;
};

/// One independent copy of `Module` per task; payloads are dispatched by task
/// id. `Module` provides forward(Tape&, Var, bool), parameters(), state() and
/// clear().
template <typename Module>
class TaskIndexed : public TaskIndexedBase {
 public:
  TaskIndexed(std::string tag, std::size_t tasks,
              const std::function<Module(TaskId)>& make)
      : tag_(std::move(tag)) {
    if (tasks == 0) throw ValidationError("task-indexed module needs tasks >= 1");
    modules_.reserve(tasks);
    for (TaskId t = 0; t < tasks; ++t) modules_.push_back(make(t));
  }

  HATPayload forward(HATPayload& input) {
    Module& m = at(input.task());
    Var x = input.masked_data();
    return input.rewrap(m.forward(input.tape(), x, input.training()));
  }

  Module& at(std::optional<TaskId> task) {
    if (!task) {
      throw UsageError("task-indexed module '" + tag_ + "' needs a task id");
    }
    if (*task >= modules_.size()) {
      throw std::out_of_range("task-indexed module '" + tag_ + "': task " +
                              std::to_string(*task) + " outside [0," +
                              std::to_string(modules_.size()) + ")");
    }
    return modules_[*task];
  }

  const std::string& tag() const override { return tag_; }
  std::size_t task_count() const override { return modules_.size(); }
  std::vector<Parameter*> task_parameters(TaskId t) override {
    return at(t).parameters();
  }
  void clear(TaskId t) override { at(t).clear(); }

  std::vector<Parameter*> parameters() {
    std::vector<Parameter*> out;
    for (Module& m : modules_) {
      for (Parameter* p : m.parameters()) out.push_back(p);
    }
    return out;
  }
  std::vector<NamedTensor> state() {
    std::vector<NamedTensor> out;
    for (Module& m : modules_) {
      for (const NamedTensor& n : m.state()) out.push_back(n);
    }
    return out;
  }

 private:
  std::string tag_;
  std::vector<Module> modules_;
};

}  // namespace hatcl

#endif  // HATCL_LAYERS_HPP_
