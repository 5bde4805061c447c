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

#ifndef HATCL_FORGETTING_HPP_
#define HATCL_FORGETTING_HPP_

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "hatcl/network.hpp"

namespace hatcl {

struct LayerForgetCount {
  std::size_t weights = 0;
  std::size_t biases = 0;
};

struct ForgetReport {
  std::map<std::string, LayerForgetCount> layers;
  std::size_t total = 0;
};

// "tag=weights:W,biases:B" per line, then "total=N".
std::string format_report(const ForgetReport& report);

struct Attribution {
  std::vector<bool> usage;
  std::vector<bool> exclusive;
};

// Units task t uses (mask above `threshold`) and the subset no other completed
// task uses. Throws StateError if t is not finalized.
Attribution attribution(const HATMasker& masker, TaskId t,
                        double threshold = kBinaryThreshold);

struct ForgetOptions {
  double threshold = kBinaryThreshold;
  EmbeddingInit init = EmbeddingInit::kOnes;
  std::uint64_t seed = 0;
};

/// Removes what the network learned for task t.
///
/// Weight (i, j) of a HAT layer is zeroed when output unit i is exclusive to t
/// and input unit j is exclusive to t at the preceding masker (or the layer
/// reads the network input). Bias i is zeroed when output unit i is exclusive
/// to t. Task-indexed submodule t is cleared, t's embeddings are
/// re-initialised, and cumulative masks are rebuilt from the remaining tasks.
/// Counts only entries that changed to zero.
ForgetReport forget_task(Network& net, TaskId t, const ForgetOptions& options = {});

}  // namespace hatcl

#endif  // HATCL_FORGETTING_HPP_
