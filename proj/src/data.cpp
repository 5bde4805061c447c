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

#include "hatcl/data.hpp"

#include <cmath>
#include <random>

#include "hatcl/errors.hpp"

namespace hatcl {

Dataset make_toy_dataset(const ToyDataSpec& spec, std::uint64_t seed) {
  if (spec.samples == 0) throw ValidationError("toy dataset needs samples >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Dataset data{Tensor({spec.samples, kToyFeatures}), {}};
  data.labels.reserve(spec.samples);
  for (std::size_t n = 0; n < spec.samples; ++n) {
    double score = 0.0;
    for (std::size_t f = 0; f < kToyFeatures; ++f) {
      const double x = normal(rng);
      data.inputs[n * kToyFeatures + f] = x;
      if (f < kToyUsefulFeatures) score += spec.teacher[f] * x;
    }
    score += spec.noise * normal(rng);
    data.labels.push_back(score > 0 ? 1 : 0);
  }
  return data;
}

namespace {

Dataset sample_clusters(const std::vector<double>& centre,
                        const std::vector<double>& direction, double separation,
                        std::size_t samples, std::mt19937_64& rng) {
  const std::size_t dims = centre.size();
  std::normal_distribution<double> normal(0.0, 1.0);
  Dataset data{Tensor({samples, dims}), {}};
  data.labels.reserve(samples);
  for (std::size_t n = 0; n < samples; ++n) {
    const int label = static_cast<int>(n % 2);
    const double offset = (label == 1 ? 0.5 : -0.5) * separation;
    for (std::size_t d = 0; d < dims; ++d) {
      data.inputs[n * dims + d] = centre[d] + offset * direction[d] + normal(rng);
    }
    data.labels.push_back(label);
  }
  return data;
}

}  // namespace

std::vector<TaskSplit> make_cluster_tasks(const ClusterTaskSpec& spec,
                                          std::uint64_t seed) {
  if (spec.tasks == 0 || spec.dims == 0 || spec.train_samples == 0 ||
      spec.test_samples == 0) {
    throw ValidationError("cluster tasks need positive tasks, dims and sample counts");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<TaskSplit> out;
  out.reserve(spec.tasks);
  for (std::size_t t = 0; t < spec.tasks; ++t) {
    std::vector<double> centre(spec.dims), direction(spec.dims);
    double norm = 0.0;
    for (std::size_t d = 0; d < spec.dims; ++d) {
      centre[d] = spec.centre_spread * normal(rng);
      direction[d] = normal(rng);
      norm += direction[d] * direction[d];
    }
    norm = std::sqrt(norm);
    for (double& v : direction) v /= norm;
    Dataset train = sample_clusters(centre, direction, spec.separation,
                                    spec.train_samples, rng);
    Dataset test = sample_clusters(centre, direction, spec.separation,
                                   spec.test_samples, rng);
    out.push_back({std::move(train), std::move(test)});
  }
  return out;
}

}  // namespace hatcl
