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

#include "hatcl/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hatcl/errors.hpp"

namespace hatcl {

std::string to_string(ScheduleKind kind) {
  return kind == ScheduleKind::kLinear ? "linear" : "cosine";
}

ScheduleKind parse_schedule_kind(const std::string& text) {
  if (text == "linear") return ScheduleKind::kLinear;
  if (text == "cosine") return ScheduleKind::kCosine;
  throw ValidationError("unknown schedule '" + text + "' (expected linear|cosine)");
}

double scale_linear(std::size_t batch, std::size_t batches, double max_scale) {
  if (batches < 2) return max_scale;
  if (batch < 1 || batch > batches) {
    throw ValidationError("scale_linear: batch " + std::to_string(batch) +
                          " outside [1," + std::to_string(batches) + "]");
  }
  const double lo = 1.0 / max_scale;
  return lo + (max_scale - lo) * static_cast<double>(batch - 1) /
                  static_cast<double>(batches - 1);
}

double scale_cosine(double progress, double max_scale, double min_scale) {
  if (!(progress >= 0.0 && progress <= 1.0)) {
    throw ValidationError("scale_cosine: progress must lie in [0, 1]");
  }
  const double raw =
      max_scale / 2.0 * (1.0 + std::cos(progress * 2.0 * std::numbers::pi));
  return std::max(min_scale, raw);
}

ScheduleState ScheduleState::make(ScheduleKind kind, double max_scale) {
  if (!(max_scale > 1.0)) throw ValidationError("schedule needs s_max > 1");
  return ScheduleState{kind, max_scale, 1.0 / max_scale};
}

double ScheduleState::scale(std::size_t batch, std::size_t batches) const {
  if (kind == ScheduleKind::kLinear) return scale_linear(batch, batches, max_scale);
  if (batches == 0 || batch < 1 || batch > batches) {
    throw ValidationError("schedule: batch " + std::to_string(batch) +
                          " outside [1," + std::to_string(batches) + "]");
  }
  const double progress =
      static_cast<double>(batch - 1) / static_cast<double>(batches);
  return scale_cosine(progress, max_scale, min_scale);
}

}  // namespace hatcl
