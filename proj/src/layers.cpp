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

#include "hatcl/layers.hpp"

#include <cmath>

namespace hatcl {
namespace {

// Training binds a parameter as a differentiable leaf; evaluation as a
// constant so nothing is hooked or accumulated.
Var bind(Tape& tape, Parameter& p, bool training) {
  return training ? tape.parameter(p) : tape.constant(p.value());
}

Tensor uniform_tensor(Shape shape, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = dist(rng);
  return t;
}

void zero(Tensor& t) {
  for (double& v : t.data()) v = 0.0;
}

}  // namespace

Linear::Linear(std::string tag, std::size_t in, std::size_t out,
               std::mt19937_64& rng)
    : tag_(std::move(tag)) {
  if (in == 0 || out == 0) throw ValidationError("linear '" + tag_ + "' needs positive sizes");
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  weight_ = Parameter(tag_ + ".weight", uniform_tensor({out, in}, bound, rng));
  bias_ = Parameter(tag_ + ".bias", uniform_tensor({out}, bound, rng));
}

Var Linear::apply(Var x, Var weight, Var bias) {
  if (x.shape().size() != 2 || x.shape()[1] != weight.shape()[1]) {
    throw DimensionError("linear: input " + shape_string(x.shape()) +
                         " incompatible with weight " +
                         shape_string(weight.shape()));
  }
  return add(matmul(x, transpose(weight)), bias);
}

Var Linear::forward(Tape& tape, Var x, bool training) {
  return apply(x, bind(tape, weight_, training), bind(tape, bias_, training));
}

std::vector<NamedTensor> Linear::state() {
  return {{weight_.name(), &weight_.value()}, {bias_.name(), &bias_.value()}};
}

void Linear::clear() {
  zero(weight_.value());
  zero(bias_.value());
}

Conv2d::Conv2d(std::string tag, std::size_t in_channels,
               std::size_t out_channels, std::size_t kernel,
               Conv2dOptions options, std::mt19937_64& rng)
    : tag_(std::move(tag)), options_(options) {
  if (in_channels == 0 || out_channels == 0 || kernel == 0) {
    throw ValidationError("conv2d '" + tag_ + "' needs positive sizes");
  }
  const double bound =
      1.0 / std::sqrt(static_cast<double>(in_channels * kernel * kernel));
  weight_ = Parameter(tag_ + ".weight",
                      uniform_tensor({out_channels, in_channels, kernel, kernel},
                                     bound, rng));
  bias_ = Parameter(tag_ + ".bias", uniform_tensor({out_channels}, bound, rng));
}

Var Conv2d::forward(Tape& tape, Var x, bool training) {
  return conv2d(x, bind(tape, weight_, training), bind(tape, bias_, training),
                options_);
}

std::vector<NamedTensor> Conv2d::state() {
  return {{weight_.name(), &weight_.value()}, {bias_.name(), &bias_.value()}};
}

void Conv2d::clear() {
  zero(weight_.value());
  zero(bias_.value());
}

LayerNorm::LayerNorm(std::string tag, std::size_t features, double eps)
    : tag_(std::move(tag)), eps_(eps),
      gamma_(tag_ + ".gamma", Tensor(Shape{features}, 1.0)),
      beta_(tag_ + ".beta", Tensor(Shape{features}, 0.0)) {}

Var LayerNorm::forward(Tape& tape, Var x, bool training) {
  if (x.shape().size() < 2) {
    throw DimensionError("layer norm '" + tag_ + "' needs batched input, got " +
                         shape_string(x.shape()));
  }
  Var y = standardize(x, NormAxes::kPerSample, eps_);
  return add(mul(y, bind(tape, gamma_, training)), bind(tape, beta_, training));
}

std::vector<NamedTensor> LayerNorm::state() {
  return {{gamma_.name(), &gamma_.value()}, {beta_.name(), &beta_.value()}};
}

void LayerNorm::clear() {
  for (double& v : gamma_.value().data()) v = 1.0;
  zero(beta_.value());
}

BatchNorm::BatchNorm(std::string tag, std::size_t channels, double momentum,
                     double eps)
    : tag_(std::move(tag)), momentum_(momentum), eps_(eps),
      gamma_(tag_ + ".gamma", Tensor(Shape{channels}, 1.0)),
      beta_(tag_ + ".beta", Tensor(Shape{channels}, 0.0)),
      running_mean_(Shape{channels}, 0.0), running_var_(Shape{channels}, 1.0) {}

Var BatchNorm::forward(Tape& tape, Var x, bool training) {
  const Shape& shape = x.shape();
  const std::size_t channels = running_mean_.numel();
  if (shape.size() < 2 || shape[1] != channels) {
    throw DimensionError("batch norm '" + tag_ + "' expects " +
                         std::to_string(channels) + " channels, got " +
                         shape_string(shape));
  }
  Var gamma = bind(tape, gamma_, training);
  Var beta = bind(tape, beta_, training);
  if (!training) {
    Tensor inv_std(Shape{channels});
    for (std::size_t c = 0; c < channels; ++c) {
      inv_std[c] = 1.0 / std::sqrt(running_var_[c] + eps_);
    }
    Var centered = sub(x, tape.constant(running_mean_));
    Var y = mul(centered, tape.constant(inv_std));
    return add(mul(y, gamma), beta);
  }

  const Tensor& xv = x.value();
  const std::size_t inner = xv.numel() / (shape[0] * channels);
  const double count = static_cast<double>(shape[0] * inner);
  std::vector<double> mu(channels, 0.0), var(channels, 0.0);
  for (std::size_t i = 0; i < xv.numel(); ++i) mu[(i / inner) % channels] += xv[i];
  for (double& m : mu) m /= count;
  for (std::size_t i = 0; i < xv.numel(); ++i) {
    const double d = xv[i] - mu[(i / inner) % channels];
    var[(i / inner) % channels] += d * d;
  }
  for (std::size_t c = 0; c < channels; ++c) {
    const double unbiased = count > 1 ? var[c] / (count - 1) : 0.0;
    running_mean_[c] = (1 - momentum_) * running_mean_[c] + momentum_ * mu[c];
    running_var_[c] = (1 - momentum_) * running_var_[c] + momentum_ * unbiased;
  }
  Var y = standardize(x, NormAxes::kPerChannel, eps_);
  return add(mul(y, gamma), beta);
}

std::vector<NamedTensor> BatchNorm::state() {
  return {{gamma_.name(), &gamma_.value()},
          {beta_.name(), &beta_.value()},
          {tag_ + ".running_mean", &running_mean_},
          {tag_ + ".running_var", &running_var_}};
}

void BatchNorm::clear() {
  for (double& v : gamma_.value().data()) v = 1.0;
  zero(beta_.value());
  zero(running_mean_);
  for (double& v : running_var_.data()) v = 1.0;
}

std::vector<Parameter*> HatLayer::parameters() {
  std::vector<Parameter*> out{&weight(), &bias()};
  for (TaskId t = 0; t < masker_.task_count(); ++t) {
    out.push_back(&masker_.embedding(t));
  }
  return out;
}

std::vector<double> HatLayer::input_cumulative(const HATMasker* preceding) const {
  // Network inputs are always in use, so the first layer is protected by its
  // output side alone.
  if (preceding == nullptr) return std::vector<double>(fan_in_, 1.0);
  return expand_units(preceding->cumulative_mask(), fan_in_);
}

void HatLayer::hook_gradients(const HATPayload& input, Var weight, Var bias) {
  if (!input.training() || !input.task()) return;
  if (masker_.finalized_tasks().empty()) return;
  const std::vector<double> out_cum = masker_.cumulative_mask();
  const std::vector<double> in_cum = input_cumulative(input.last_masker());
  Tape& tape = input.tape();
  tape.register_hook(weight, [out_cum, in_cum](const Tensor& g) {
    return grad_nullify(g, out_cum, in_cum);
  });
  tape.register_hook(bias, [out_cum](const Tensor& g) {
    return grad_nullify(g, out_cum, {});
  });
}

HATLinear::HATLinear(std::string tag, std::size_t in, std::size_t out,
                     std::size_t tasks, std::mt19937_64& rng, double max_scale)
    : HatLayer(tag, tasks, out, in, max_scale), base_(tag, in, out, rng) {}

HATPayload HATLinear::forward(HATPayload& input) {
  Var x = input.masked_data();
  Tape& tape = input.tape();
  const bool training = input.training();
  Var w = bind(tape, base_.weight(), training);
  Var b = bind(tape, base_.bias(), training);
  hook_gradients(input, w, b);
  HATPayload out = input.rewrap(Linear::apply(x, w, b));
  out.attach(masker());
  return out;
}

HATConv2d::HATConv2d(std::string tag, std::size_t in_channels,
                     std::size_t out_channels, std::size_t kernel,
                     Conv2dOptions options, std::size_t tasks,
                     std::mt19937_64& rng, double max_scale)
    : HatLayer(tag, tasks, out_channels, in_channels, max_scale),
      base_(tag, in_channels, out_channels, kernel, options, rng) {}

HATPayload HATConv2d::forward(HATPayload& input) {
  Var x = input.masked_data();
  Tape& tape = input.tape();
  const bool training = input.training();
  Var w = bind(tape, base_.weight(), training);
  Var b = bind(tape, base_.bias(), training);
  hook_gradients(input, w, b);
  HATPayload out = input.rewrap(conv2d(x, w, b, base_.options()));
  out.attach(masker());
  return out;
}

HATPayload HATGate::forward(HATPayload& input) {
  HATPayload out = input.rewrap(input.masked_data());
  out.attach(masker_);
  return out;
}

}  // namespace hatcl
