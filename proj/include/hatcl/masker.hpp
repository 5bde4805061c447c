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

#ifndef HATCL_MASKER_HPP_
#define HATCL_MASKER_HPP_

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "hatcl/autograd.hpp"

namespace hatcl {

using TaskId = std::size_t;

inline constexpr double kDefaultMaxScale = 400.0;
// Bound on |e| enforced after every optimizer step.
inline constexpr double kEmbeddingBound = 6.0;
// Bound on the cosh arguments of the compensation factor.
inline constexpr double kCoshArgBound = 50.0;
// Compensated embedding gradients are kept within this multiple of max|q|.
inline constexpr double kCompensationRail = 100.0;
inline constexpr double kBinaryThreshold = 0.5;

enum class EmbeddingInit { kOnes, kGaussian };

std::string to_string(EmbeddingInit init);
EmbeddingInit parse_embedding_init(const std::string& text);

double stable_sigmoid(double x);

// a = sigmoid(s * e), elementwise.
std::vector<double> attention(std::span<const double> embedding, double scale);
Var attention(Var embedding, double scale);

/// Gradient nullification for a weighted layer.
///
/// `grad` is [out, in, taps...] for weights or [out] for biases. Weight entry
/// (i, j, ...) is multiplied by 1 - min(out_cum[i], in_cum[j]); bias entry i by
/// 1 - out_cum[i]. `in_cum` is ignored for biases.
Tensor grad_nullify(const Tensor& grad, std::span<const double> out_cum,
                    std::span<const double> in_cum);

/// Embedding gradient compensation:
///   q'_i = s_max (cosh(s e_i) + 1) / (s (cosh(e_i) + 1)) q_i
/// with both cosh arguments clamped to |x| <= kCoshArgBound.
Tensor grad_compensate(const Tensor& grad, std::span<const double> embedding,
                       double scale, double max_scale);

// Clamps each entry of `compensated` to |v| <= kCompensationRail * max|raw|.
Tensor clamp_compensated(const Tensor& compensated, const Tensor& raw);

// Repeats each unit of `units` over a contiguous block so the result has
// `width` entries (a flattened [C, H, W] feeding a linear layer). Throws
// DimensionError when width is not a multiple of units.size().
std::vector<double> expand_units(std::span<const double> units,
                                 std::size_t width);

/// Per-layer task embeddings plus the masks of completed tasks.
class HATMasker {
 public:
  HATMasker(std::string tag, std::size_t tasks, std::size_t features,
            double max_scale = kDefaultMaxScale);

  const std::string& tag() const { return tag_; }
  std::size_t task_count() const { return embeddings_.size(); }
  std::size_t features() const { return features_; }
  double max_scale() const { return max_scale_; }

  Parameter& embedding(TaskId t);
  const Parameter& embedding(TaskId t) const;

  // a^{<=t-1}: elementwise max of the masks of all completed tasks.
  const std::vector<double>& cumulative_mask() const { return cumulative_; }

  bool finalized(TaskId t) const;
  std::vector<TaskId> finalized_tasks() const;
  const std::vector<std::uint8_t>& stored_mask(TaskId t) const;

  std::vector<double> mask(TaskId t, double scale) const;
  std::vector<double> mask_at_max_scale(TaskId t) const;

  // Folds sigmoid(max_scale * e^t) into the cumulative mask and stores the
  // binarised task mask. Throws StateError if t is already finalized.
  void finalize(TaskId t);

  void clamp_embedding(TaskId t, double bound = kEmbeddingBound);
  void init_embedding(TaskId t, EmbeddingInit init, std::mt19937_64& rng);
  void init_embeddings(EmbeddingInit init, std::mt19937_64& rng);

  // Drops task t's stored mask, re-initialises its embedding and rebuilds the
  // cumulative mask from the remaining completed tasks.
  void forget(TaskId t, EmbeddingInit init, std::mt19937_64& rng);

  // Restores completed-task state, e.g. from a checkpoint.
  void restore(std::vector<double> cumulative,
               std::vector<std::optional<std::vector<std::uint8_t>>> stored);

 private:
  void check_task(TaskId t) const;
  void rebuild_cumulative();

  std::string tag_;
  std::size_t features_;
  double max_scale_;
  std::vector<Parameter> embeddings_;
  std::vector<double> cumulative_;
  std::vector<std::optional<std::vector<std::uint8_t>>> stored_;
};

}  // namespace hatcl

#endif  // HATCL_MASKER_HPP_
