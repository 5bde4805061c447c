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

#include "hatcl/payload.hpp"

#include <memory>

#include "hatcl/errors.hpp"

namespace hatcl {
namespace {

std::size_t feature_extent(const Shape& shape) {
  return shape.size() >= 2 ? shape[1] : shape.at(0);
}

void check_compatible(const HATPayload& lhs, const HATPayload& rhs,
                      const char* op) {
  if (lhs.task() != rhs.task() || lhs.scale() != rhs.scale()) {
    throw UsageError(std::string(op) +
                     ": payloads carry different task ids or mask scales");
  }
  if (&lhs.tape() != &rhs.tape()) {
    throw UsageError(std::string(op) + ": payloads live on different tapes");
  }
}

}  // namespace

HATPayload::HATPayload(Var data, std::optional<TaskId> task,
                       std::optional<double> scale, bool training)
    : data_(data), task_(task), scale_(scale), training_(training) {
  if (!data.valid()) throw UsageError("payload needs data on a tape");
  if (scale && !(*scale > 0)) {
    throw ValidationError("payload mask scale must be > 0");
  }
}

double HATPayload::effective_scale(const HATMasker& masker) const {
  return scale_.value_or(masker.max_scale());
}

const HATMasker* HATPayload::last_masker() const {
  return chain_.empty() ? nullptr : chain_.back().masker;
}

void HATPayload::attach(HATMasker& masker) {
  if (pending_ != nullptr) {
    throw UsageError("payload already has pending masker '" + pending_->tag() +
                     "'");
  }
  pending_ = &masker;
}

Var HATPayload::masked_data() {
  if (pending_ == nullptr) return data_;
  HATMasker& masker = *pending_;
  MaskTrace trace{&masker, std::nullopt};

  if (task_) {
    if (feature_extent(data_.shape()) != masker.features()) {
      throw DimensionError("mask '" + masker.tag() + "' has " +
                           std::to_string(masker.features()) +
                           " units but data " + shape_string(data_.shape()) +
                           " has " +
                           std::to_string(feature_extent(data_.shape())) +
                           " features");
    }
    const TaskId t = *task_;
    const double s = effective_scale(masker);
    Tape& tp = tape();
    Parameter& embedding = masker.embedding(t);
    Var e = training_ ? tp.parameter(embedding) : tp.constant(embedding.value());
    if (training_) {
      const std::vector<double> values = embedding.value().values();
      const double s_max = masker.max_scale();
      // The rail hook runs second and bounds the compensated gradient by the
      // raw gradient the first hook saw.
      auto raw = std::make_shared<Tensor>();
      tp.register_hook(e, [values, s, s_max, raw](const Tensor& q) {
        *raw = q;
        return grad_compensate(q, values, s, s_max);
      });
      tp.register_hook(e, [raw](const Tensor& q) {
        return clamp_compensated(q, *raw);
      });
    }
    Var a = attention(e, s);
    trace.mask = a;
    data_ = mul(data_, a);
  }
  chain_.push_back(trace);
  pending_ = nullptr;
  return data_;
}

HATPayload HATPayload::rewrap(Var data) const {
  HATPayload out(data, task_, scale_, training_);
  out.chain_ = chain_;
  return out;
}

HATPayload HATPayload::forward_by(const std::function<Var(Var)>& op) {
  Var x = masked_data();
  return rewrap(op(x));
}

HATPayload HATPayload::reshape(Shape shape) {
  Var x = masked_data();
  return rewrap(hatcl::reshape(x, std::move(shape)));
}

HATPayload HATPayload::permute(std::vector<std::size_t> axes) {
  Var x = masked_data();
  return rewrap(hatcl::permute(x, std::move(axes)));
}

HATPayload add(HATPayload& lhs, HATPayload& rhs) {
  check_compatible(lhs, rhs, "add");
  Var x = lhs.masked_data();
  Var y = rhs.masked_data();
  HATPayload out = lhs.rewrap(add(x, y));
  out.chain_.insert(out.chain_.end(), rhs.chain_.begin(), rhs.chain_.end());
  return out;
}

HATPayload matmul(HATPayload& lhs, HATPayload& rhs) {
  check_compatible(lhs, rhs, "matmul");
  Var x = lhs.masked_data();
  Var y = rhs.masked_data();
  HATPayload out = lhs.rewrap(matmul(x, y));
  out.chain_.insert(out.chain_.end(), rhs.chain_.begin(), rhs.chain_.end());
  return out;
}

}  // namespace hatcl
