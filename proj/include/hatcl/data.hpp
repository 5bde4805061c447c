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

#ifndef HATCL_DATA_HPP_
#define HATCL_DATA_HPP_

#include <array>
#include <cstdint>
#include <vector>

#include "hatcl/trainer.hpp"

namespace hatcl {

// Five standard-normal features; the label is [w . x[0:3] + noise > 0], so
// features 3 and 4 carry no signal.
struct ToyDataSpec {
  std::size_t samples = 256;
  std::array<double, 3> teacher{1.0, -1.0, 1.0};
  double noise = 0.1;
};
inline constexpr std::size_t kToyFeatures = 5;
inline constexpr std::size_t kToyUsefulFeatures = 3;

Dataset make_toy_dataset(const ToyDataSpec& spec, std::uint64_t seed);

// A sequence of two-class tasks. Each task has two isotropic unit-variance
// Gaussian clusters whose means sit `separation` apart along a random
// direction, around a random task centre; classes are balanced.
struct ClusterTaskSpec {
  std::size_t tasks = 5;
  std::size_t dims = 16;
  std::size_t train_samples = 1000;
  std::size_t test_samples = 400;
  double separation = 6.0;
  double centre_spread = 4.0;
};

struct TaskSplit {
  Dataset train;
  Dataset test;
};

std::vector<TaskSplit> make_cluster_tasks(const ClusterTaskSpec& spec,
                                          std::uint64_t seed);

}  // namespace hatcl

#endif  // HATCL_DATA_HPP_
