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

#include "hatcl/autograd.hpp"

#include <algorithm>

#include "hatcl/errors.hpp"

namespace hatcl {

void Parameter::zero_grad() {
  if (grad_.shape() != value_.shape()) {
    grad_ = Tensor(value_.shape());
    return;
  }
  std::fill(grad_.data().begin(), grad_.data().end(), 0.0);
}

const Tensor& Var::value() const { return tape_->value(id_); }
Tensor Var::grad() const { return tape_->grad(id_); }
bool Var::requires_grad() const { return tape_->requires_grad(id_); }

bool GradSink::wants(std::size_t input) const {
  return tape_.nodes_[inputs_[input]].requires_grad;
}

void GradSink::accumulate(std::size_t input, const Tensor& grad) {
  auto& target = tape_.nodes_[inputs_[input]];
  if (!target.requires_grad) return;
  if (grad.shape() != target.value.shape()) {
    throw DimensionError("gradient " + shape_string(grad.shape()) +
                         " does not match node " +
                         shape_string(target.value.shape()));
  }
  if (target.pending.numel() == 0) {
    target.pending = grad;
  } else {
    target.pending += grad;
  }
}

Tape::Node& Tape::node(NodeId id, const char* what) {
  if (id >= nodes_.size()) {
    throw UsageError(std::string(what) + ": unknown node " + std::to_string(id));
  }
  return nodes_[id];
}

const Tape::Node& Tape::node(NodeId id, const char* what) const {
  if (id >= nodes_.size()) {
    throw UsageError(std::string(what) + ": unknown node " + std::to_string(id));
  }
  return nodes_[id];
}

Var Tape::constant(Tensor value) {
  if (consumed_) throw StateError("tape already consumed by backward");
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::variable(Tensor value) {
  Var v = constant(std::move(value));
  nodes_.back().requires_grad = true;
  return v;
}

Var Tape::parameter(Parameter& param) {
  Var v = variable(param.value());
  nodes_.back().param = &param;
  return v;
}

Var Tape::record(Tensor value, std::vector<NodeId> inputs, BackwardFn backward) {
  if (consumed_) throw StateError("tape already consumed by backward");
  bool needs_grad = false;
  for (NodeId id : inputs) {
    needs_grad = needs_grad || node(id, "record").requires_grad;
  }
  Node n;
  n.value = std::move(value);
  n.inputs = std::move(inputs);
  n.requires_grad = needs_grad;
  if (needs_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

HookHandle Tape::register_hook(Var v, GradHook hook) {
  if (v.valid() && &v.tape() != this) {
    throw UsageError("register_hook: node belongs to another tape");
  }
  Node& n = node(v.id(), "register_hook");
  if (consumed_) throw StateError("register_hook: tape already consumed");
  const std::size_t serial = next_hook_serial_++;
  n.hooks.push_back(Hook{serial, std::move(hook)});
  return HookHandle{v.id(), serial};
}

void Tape::remove_hook(HookHandle handle) {
  Node& n = node(handle.node, "remove_hook");
  auto it = std::find_if(n.hooks.begin(), n.hooks.end(), [&](const Hook& h) {
    return h.serial == handle.serial;
  });
  if (it == n.hooks.end()) throw UsageError("remove_hook: unknown hook handle");
  n.hooks.erase(it);
}

void Tape::backward(Var loss) {
  if (consumed_) {
    throw StateError("backward called twice on the same tape without reset");
  }
  Node& root = node(loss.id(), "backward");
  if (root.value.numel() != 1) {
    throw UsageError("backward needs a scalar loss, got " +
                     shape_string(root.value.shape()));
  }
  consumed_ = true;
  if (!root.requires_grad) return;
  root.pending = Tensor(root.value.shape(), 1.0);

  for (std::size_t k = loss.id() + 1; k-- > 0;) {
    Node& n = nodes_[k];
    if (!n.requires_grad || n.pending.numel() == 0) continue;
    Tensor g = std::move(n.pending);
    n.pending = Tensor();
    for (const Hook& hook : n.hooks) {
      Tensor next = hook.transform(g);
      if (next.shape() != g.shape()) {
        throw DimensionError("gradient hook changed shape " +
                             shape_string(g.shape()) + " -> " +
                             shape_string(next.shape()));
      }
      g = std::move(next);
    }
    if (n.param != nullptr) {
      if (n.param->grad().shape() != g.shape()) n.param->zero_grad();
      n.param->grad() += g;
    }
    if (n.backward) {
      GradSink sink(*this, n.inputs);
      n.backward(g, sink);
    }
    n.grad = std::move(g);
  }
}

void Tape::reset() {
  nodes_.clear();
  consumed_ = false;
}

const Tensor& Tape::value(NodeId id) const { return node(id, "value").value; }

Tensor Tape::grad(NodeId id) const {
  const Node& n = node(id, "grad");
  // Nodes no gradient reached report zeros.
  if (n.grad.numel() == 0) return Tensor(n.value.shape());
  return n.grad;
}

bool Tape::requires_grad(NodeId id) const {
  return node(id, "requires_grad").requires_grad;
}

}  // namespace hatcl
