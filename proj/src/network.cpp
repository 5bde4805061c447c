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

#include "hatcl/network.hpp"

namespace hatcl {

void Network::zero_grad() {
  for (Parameter* p : parameters()) p->zero_grad();
}

HatMlp::HatMlp(const MlpSpec& spec, std::mt19937_64& rng) : spec_(spec) {
  if (spec.inputs == 0 || spec.classes == 0 || spec.tasks == 0) {
    throw ValidationError("mlp needs inputs, classes and tasks >= 1");
  }
  if (spec.input_gate) {
    gate_ = std::make_unique<HATGate>("gate", spec.inputs, spec.tasks,
                                      spec.max_scale);
  }
  std::size_t width = spec.inputs;
  for (std::size_t l = 0; l < spec.hidden.size(); ++l) {
    const std::string tag = "hidden." + std::to_string(l);
    hidden_.push_back(std::make_unique<HATLinear>(tag, width, spec.hidden[l],
                                                  spec.tasks, rng,
                                                  spec.max_scale));
    const std::size_t features = spec.hidden[l];
    if (spec.norm == NormKind::kLayer) {
      layer_norms_.push_back(std::make_unique<TaskIndexed<LayerNorm>>(
          "norm." + std::to_string(l), spec.tasks, [&](TaskId t) {
            return LayerNorm("norm." + std::to_string(l) + "." + std::to_string(t),
                             features);
          }));
    } else if (spec.norm == NormKind::kBatch) {
      batch_norms_.push_back(std::make_unique<TaskIndexed<BatchNorm>>(
          "norm." + std::to_string(l), spec.tasks, [&](TaskId t) {
            return BatchNorm("norm." + std::to_string(l) + "." + std::to_string(t),
                             features);
          }));
    }
    width = features;
  }
  if (spec.head == HeadKind::kTaskIndexed) {
    task_head_ = std::make_unique<TaskIndexed<Linear>>(
        "head", spec.tasks, [&](TaskId t) {
          return Linear("head." + std::to_string(t), width, spec.classes, rng);
        });
  } else {
    shared_head_ = std::make_unique<Linear>("head", width, spec.classes, rng);
  }
}

HATPayload HatMlp::forward(HATPayload input) {
  HATPayload p = gate_ ? gate_->forward(input) : input;
  for (std::size_t l = 0; l < hidden_.size(); ++l) {
    p = hidden_[l]->forward(p);
    if (!layer_norms_.empty()) p = layer_norms_[l]->forward(p);
    if (!batch_norms_.empty()) p = batch_norms_[l]->forward(p);
    p = p.forward_by([](Var x) { return relu(x); });
  }
  if (task_head_) return task_head_->forward(p);
  const bool training = p.training();
  Tape& tape = p.tape();
  return p.forward_by([&](Var x) { return shared_head_->forward(tape, x, training); });
}

std::vector<Parameter*> HatMlp::parameters() {
  std::vector<Parameter*> out;
  auto append = [&out](const std::vector<Parameter*>& more) {
    out.insert(out.end(), more.begin(), more.end());
  };
  if (gate_) {
    for (TaskId t = 0; t < spec_.tasks; ++t) out.push_back(&gate_->masker().embedding(t));
  }
  for (auto& layer : hidden_) append(layer->parameters());
  for (auto& norm : layer_norms_) append(norm->parameters());
  for (auto& norm : batch_norms_) append(norm->parameters());
  if (task_head_) append(task_head_->parameters());
  if (shared_head_) append(shared_head_->parameters());
  return out;
}

std::vector<HATMasker*> HatMlp::maskers() {
  std::vector<HATMasker*> out;
  if (gate_) out.push_back(&gate_->masker());
  for (auto& layer : hidden_) out.push_back(&layer->masker());
  return out;
}

std::vector<LayerLink> HatMlp::layer_links() {
  std::vector<LayerLink> out;
  const HATMasker* preceding = gate_ ? &gate_->masker() : nullptr;
  for (auto& layer : hidden_) {
    out.push_back({layer.get(), preceding});
    preceding = &layer->masker();
  }
  return out;
}

std::vector<TaskIndexedBase*> HatMlp::task_modules() {
  std::vector<TaskIndexedBase*> out;
  for (auto& norm : layer_norms_) out.push_back(norm.get());
  for (auto& norm : batch_norms_) out.push_back(norm.get());
  if (task_head_) out.push_back(task_head_.get());
  return out;
}

std::vector<NamedTensor> HatMlp::state() {
  std::vector<NamedTensor> out;
  auto append = [&out](const std::vector<NamedTensor>& more) {
    out.insert(out.end(), more.begin(), more.end());
  };
  for (auto& layer : hidden_) append(layer->state());
  for (auto& norm : layer_norms_) append(norm->state());
  for (auto& norm : batch_norms_) append(norm->state());
  if (task_head_) append(task_head_->state());
  if (shared_head_) append(shared_head_->state());
  return out;
}

}  // namespace hatcl
