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

#ifndef HATCL_NETWORK_HPP_
#define HATCL_NETWORK_HPP_

#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "hatcl/layers.hpp"

namespace hatcl {

// A HAT layer and the masker whose units feed its weight axis 1 (null when
// the layer reads the network input directly).
struct LayerLink {
  HatLayer* layer = nullptr;
  const HATMasker* preceding = nullptr;
};

class Network {
 public:
  virtual ~Network() = default;

  virtual HATPayload forward(HATPayload input) = 0;
  virtual std::vector<Parameter*> parameters() = 0;
  virtual std::vector<HATMasker*> maskers() = 0;
  virtual std::vector<LayerLink> layer_links() = 0;
  virtual std::vector<TaskIndexedBase*> task_modules() = 0;
  // Every parameter and buffer by checkpoint name, maskers excluded.
  virtual std::vector<NamedTensor> state() = 0;
  virtual std::size_t task_count() const = 0;

  void zero_grad();
};

enum class HeadKind { kTaskIndexed, kShared };
enum class NormKind { kNone, kLayer, kBatch };

struct MlpSpec {
  std::size_t inputs = 16;
  std::vector<std::size_t> hidden{64, 64};
  std::size_t classes = 2;
  std::size_t tasks = 5;
  double max_scale = kDefaultMaxScale;
  // Adds a masker over the input features in front of the first layer.
  bool input_gate = false;
  HeadKind head = HeadKind::kTaskIndexed;
  NormKind norm = NormKind::kNone;
};

/// Multi-layer perceptron of HAT linear layers with ReLU activations and a
/// task-indexed (multi-head) or shared linear classifier.
class HatMlp : public Network {
 public:
  HatMlp(const MlpSpec& spec, std::mt19937_64& rng);

  HATPayload forward(HATPayload input) override;
  std::vector<Parameter*> parameters() override;
  std::vector<HATMasker*> maskers() override;
  std::vector<LayerLink> layer_links() override;
  std::vector<TaskIndexedBase*> task_modules() override;
  std::vector<NamedTensor> state() override;
  std::size_t task_count() const override { return spec_.tasks; }

  const MlpSpec& spec() const { return spec_; }
  HATGate* gate() { return gate_.get(); }
  HATLinear& hidden(std::size_t l) { return *hidden_.at(l); }
  std::size_t depth() const { return hidden_.size(); }

 private:
  MlpSpec spec_;
  std::unique_ptr<HATGate> gate_;
  std::vector<std::unique_ptr<HATLinear>> hidden_;
  std::vector<std::unique_ptr<TaskIndexed<LayerNorm>>> layer_norms_;
  std::vector<std::unique_ptr<TaskIndexed<BatchNorm>>> batch_norms_;
  std::unique_ptr<TaskIndexed<Linear>> task_head_;
  std::unique_ptr<Linear> shared_head_;
};

}  // namespace hatcl

#endif  // HATCL_NETWORK_HPP_
