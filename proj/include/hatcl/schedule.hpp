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

#ifndef HATCL_SCHEDULE_HPP_
#define HATCL_SCHEDULE_HPP_

#include <cstddef>
#include <string>

namespace hatcl {

enum class ScheduleKind { kLinear, kCosine };

std::string to_string(ScheduleKind kind);
ScheduleKind parse_schedule_kind(const std::string& text);

// s = 1/s_max + (s_max - 1/s_max) (b - 1) / (B - 1) for batch b of B (1-based).
// A single-batch epoch (B < 2) returns s_max.
double scale_linear(std::size_t batch, std::size_t batches, double max_scale);

// s = max(s_min, s_max / 2 (1 + cos(2 pi p))) for progress p in [0, 1].
double scale_cosine(double progress, double max_scale, double min_scale);

/// Mask-scale schedule over one unit of training time (one epoch).
struct ScheduleState {
  ScheduleKind kind = ScheduleKind::kCosine;
  double max_scale = 400.0;
  // Cosine floor; defaults to 1 / max_scale.
  double min_scale = 1.0 / 400.0;

  static ScheduleState make(ScheduleKind kind, double max_scale);

  // Scale for 1-based batch b of an epoch of B batches. The cosine schedule
  // uses progress p = (b - 1) / B.
  double scale(std::size_t batch, std::size_t batches) const;
};

}  // namespace hatcl

#endif  // HATCL_SCHEDULE_HPP_
