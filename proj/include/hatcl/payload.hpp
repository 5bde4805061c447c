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

#ifndef HATCL_PAYLOAD_HPP_
#define HATCL_PAYLOAD_HPP_

#include <functional>
#include <optional>
#include <vector>

#include "hatcl/autograd.hpp"
#include "hatcl/masker.hpp"

namespace hatcl {

// One traversed masker and the mask tensor it produced on the tape. `mask` is
// empty for payloads without a task id.
struct MaskTrace {
  HATMasker* masker = nullptr;
  std::optional<Var> mask;
};

/// The value that flows between HAT modules: unmasked data plus task id, mask
/// scale and the maskers traversed so far.
///
/// A HAT layer leaves its output masker *pending*; the mask is multiplied in
/// only when `masked_data()` is called. Materialisation moves the pending
/// masker to the end of the chain, so the chain records layer order.
class HATPayload {
 public:
  HATPayload(Var data, std::optional<TaskId> task, std::optional<double> scale,
             bool training);

  Var masked_data();

  // Wraps op(masked_data()) in a new payload with the same task, scale and
  // chain and nothing pending.
  HATPayload forward_by(const std::function<Var(Var)>& op);

  HATPayload reshape(Shape shape);
  HATPayload permute(std::vector<std::size_t> axes);

  // Makes `masker` pending. A payload holds at most one pending masker.
  void attach(HATMasker& masker);

  Var data() const { return data_; }
  Tape& tape() const { return data_.tape(); }
  std::optional<TaskId> task() const { return task_; }
  std::optional<double> scale() const { return scale_; }
  bool training() const { return training_; }
  HATMasker* pending() const { return pending_; }
  const std::vector<MaskTrace>& chain() const { return chain_; }

  // Scale a masker should use; an absent scale means the masker's max scale.
  double effective_scale(const HATMasker& masker) const;

  // The most recently traversed masker, or null.
  const HATMasker* last_masker() const;

  // Wraps `data` with this payload's metadata and chain, nothing pending.
  HATPayload rewrap(Var data) const;

 private:
  friend HATPayload add(HATPayload& lhs, HATPayload& rhs);
  friend HATPayload matmul(HATPayload& lhs, HATPayload& rhs);

  Var data_;
  std::optional<TaskId> task_;
  std::optional<double> scale_;
  bool training_ = false;
  HATMasker* pending_ = nullptr;
  std::vector<MaskTrace> chain_;
};

HATPayload add(HATPayload& lhs, HATPayload& rhs);
HATPayload matmul(HATPayload& lhs, HATPayload& rhs);

}  // namespace hatcl

#endif  // HATCL_PAYLOAD_HPP_
