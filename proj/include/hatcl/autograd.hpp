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

// Define-by-run reverse-mode autodiff.
//
// A `Tape` records every operation of one forward pass as an append-only list
// of nodes. `backward` walks the list in exact reverse creation order; before a
// node's incoming gradient is stored in its slot and propagated, the node's
// hooks are applied to it in registration order. Model state lives in
// `Parameter`s, which outlive tapes: `Tape::parameter` creates a leaf whose
// final gradient is accumulated into `Parameter::grad`.

#ifndef HATCL_AUTOGRAD_HPP_
#define HATCL_AUTOGRAD_HPP_

#include <cstddef>
#include <deque>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hatcl/tensor.hpp"

namespace hatcl {

using NodeId = std::size_t;

// Pure gradient transform. Must return a tensor of the input's shape.
using GradHook = std::function<Tensor(const Tensor&)>;

struct HookHandle {
  NodeId node = 0;
  std::size_t serial = 0;
};

class Parameter {
 public:
  Parameter() = default;
  Parameter(std::string name, Tensor value)
      : name_(std::move(name)), value_(std::move(value)),
        grad_(value_.shape()) {}

  const std::string& name() const { return name_; }
  const Shape& shape() const { return value_.shape(); }

  const Tensor& value() const { return value_; }
  Tensor& value() { return value_; }
  const Tensor& grad() const { return grad_; }
  Tensor& grad() { return grad_; }

  void zero_grad();

 private:
  std::string name_;
  Tensor value_;
  Tensor grad_;
};

class Tape;

/// Handle to a node on a tape. Cheap to copy; only valid while its tape lives
/// and has not been reset.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, NodeId id) : tape_(tape), id_(id) {}

  Tape& tape() const { return *tape_; }
  NodeId id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

  const Tensor& value() const;
  Tensor grad() const;
  const Shape& shape() const { return value().shape(); }
  bool requires_grad() const;

 private:
  Tape* tape_ = nullptr;
  NodeId id_ = 0;
};

// Receives the input gradients produced by one node's backward function.
class GradSink {
 public:
  GradSink(Tape& tape, std::span<const NodeId> inputs)
      : tape_(tape), inputs_(inputs) {}
  bool wants(std::size_t input) const;
  void accumulate(std::size_t input, const Tensor& grad);

 private:
  Tape& tape_;
  std::span<const NodeId> inputs_;
};

using BackwardFn = std::function<void(const Tensor& grad_out, GradSink& sink)>;

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var variable(Tensor value);
  Var parameter(Parameter& param);

  // Appends an op node. requires_grad is inherited from the inputs.
  Var record(Tensor value, std::vector<NodeId> inputs, BackwardFn backward);

  HookHandle register_hook(Var node, GradHook hook);
  void remove_hook(HookHandle handle);

  void backward(Var loss);
  void reset();

  std::size_t size() const { return nodes_.size(); }
  bool consumed() const { return consumed_; }
  const Tensor& value(NodeId id) const;
  Tensor grad(NodeId id) const;
  bool requires_grad(NodeId id) const;

 private:
  friend class GradSink;

  struct Hook {
    std::size_t serial;
    GradHook transform;
  };

  struct Node {
    Tensor value;
    std::vector<NodeId> inputs;
    BackwardFn backward;
    bool requires_grad = false;
    Parameter* param = nullptr;
    std::vector<Hook> hooks;
    Tensor pending;
    Tensor grad;
  };

  Node& node(NodeId id, const char* what);
  const Node& node(NodeId id, const char* what) const;

  // A deque keeps value() references valid while the tape grows.
  std::deque<Node> nodes_;
  std::size_t next_hook_serial_ = 1;
  bool consumed_ = false;
};

// ---------------------------------------------------------------------------
// Operations. Binary elementwise ops accept equal shapes, or a rank-1 right
// operand of length C broadcast over axis 1 of a rank>=2 left operand.

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double c);
Var shift(Var a, double c);
Var sigmoid(Var a);
Var relu(Var a);
Var clamp(Var a, double lo, double hi);

Var matmul(Var a, Var b);
Var reshape(Var a, Shape shape);
Var permute(Var a, std::vector<std::size_t> axes);
Var transpose(Var a);

struct Conv2dOptions {
  std::size_t stride = 1;
  std::size_t padding = 0;
};
Var conv2d(Var input, Var weight, std::optional<Var> bias,
           Conv2dOptions options = {});

Var sum(Var a);
Var mean(Var a);
// Mean softmax cross-entropy over the batch. Labels index axis 1 of logits.
Var softmax_cross_entropy(Var logits, std::span<const int> labels);

// Zero-mean, unit-variance normalisation. kPerSample normalises each sample
// over all non-batch axes; kPerChannel normalises each axis-1 channel over the
// batch and spatial axes.
enum class NormAxes { kPerSample, kPerChannel };
Var standardize(Var a, NormAxes axes, double eps);

}  // namespace hatcl

#endif  // HATCL_AUTOGRAD_HPP_
