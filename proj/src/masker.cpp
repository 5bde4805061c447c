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

#include "hatcl/masker.hpp"

#include <algorithm>
#include <cmath>

#include "hatcl/errors.hpp"

namespace hatcl {

std::string to_string(EmbeddingInit init) {
  return init == EmbeddingInit::kOnes ? "ones" : "gaussian";
}

EmbeddingInit parse_embedding_init(const std::string& text) {
  if (text == "ones") return EmbeddingInit::kOnes;
  if (text == "gaussian") return EmbeddingInit::kGaussian;
  throw ValidationError("unknown embedding init '" + text +
                        "' (expected ones|gaussian)");
}

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::vector<double> attention(std::span<const double> embedding, double scale) {
  std::vector<double> out(embedding.size());
  for (std::size_t i = 0; i < embedding.size(); ++i) {
    out[i] = stable_sigmoid(scale * embedding[i]);
  }
  return out;
}

Var attention(Var embedding, double scale) {
  if (!(scale > 0)) throw ValidationError("attention: mask scale must be > 0");
  return sigmoid(hatcl::scale(embedding, scale));
}

Tensor grad_nullify(const Tensor& grad, std::span<const double> out_cum,
                    std::span<const double> in_cum) {
  const Shape& shape = grad.shape();
  if (shape.empty() || shape[0] != out_cum.size()) {
    throw DimensionError("grad_nullify: gradient " + shape_string(shape) +
                         " does not match " + std::to_string(out_cum.size()) +
                         " output units");
  }
  Tensor out = grad;
  if (shape.size() == 1) {
    for (std::size_t i = 0; i < shape[0]; ++i) out[i] *= 1.0 - out_cum[i];
    return out;
  }
  const std::size_t fan_in = shape[1];
  if (in_cum.size() != fan_in) {
    throw DimensionError("grad_nullify: gradient " + shape_string(shape) +
                         " does not match " + std::to_string(in_cum.size()) +
                         " input units");
  }
  const std::size_t taps = grad.numel() / (shape[0] * fan_in);
  for (std::size_t i = 0; i < shape[0]; ++i) {
    for (std::size_t j = 0; j < fan_in; ++j) {
      const double factor = 1.0 - std::min(out_cum[i], in_cum[j]);
      const std::size_t base = (i * fan_in + j) * taps;
      for (std::size_t k = 0; k < taps; ++k) out[base + k] *= factor;
    }
  }
  return out;
}

Tensor grad_compensate(const Tensor& grad, std::span<const double> embedding,
                       double scale, double max_scale) {
  if (grad.numel() != embedding.size()) {
    throw DimensionError("grad_compensate: gradient " +
                         shape_string(grad.shape()) + " does not match " +
                         std::to_string(embedding.size()) + " embeddings");
  }
  Tensor out = grad;
  for (std::size_t i = 0; i < embedding.size(); ++i) {
    const double scaled =
        std::clamp(scale * embedding[i], -kCoshArgBound, kCoshArgBound);
    const double plain = std::clamp(embedding[i], -kCoshArgBound, kCoshArgBound);
    out[i] *= max_scale * (std::cosh(scaled) + 1.0) /
              (scale * (std::cosh(plain) + 1.0));
  }
  return out;
}

Tensor clamp_compensated(const Tensor& compensated, const Tensor& raw) {
  double peak = 0.0;
  for (double v : raw.data()) peak = std::max(peak, std::abs(v));
  const double bound = kCompensationRail * peak;
  Tensor out = compensated;
  for (double& v : out.data()) v = std::clamp(v, -bound, bound);
  return out;
}

std::vector<double> expand_units(std::span<const double> units,
                                 std::size_t width) {
  if (units.empty() || width % units.size() != 0) {
    throw DimensionError("cannot spread " + std::to_string(units.size()) +
                         " mask units over " + std::to_string(width) +
                         " inputs");
  }
  const std::size_t block = width / units.size();
  std::vector<double> out(width);
  for (std::size_t j = 0; j < width; ++j) out[j] = units[j / block];
  return out;
}

HATMasker::HATMasker(std::string tag, std::size_t tasks, std::size_t features,
                     double max_scale)
    : tag_(std::move(tag)), features_(features), max_scale_(max_scale),
      cumulative_(features, 0.0), stored_(tasks) {
  if (tasks == 0 || features == 0) {
    throw ValidationError("masker '" + tag_ + "' needs tasks >= 1 and features >= 1");
  }
  if (!(max_scale > 1.0)) {
    throw ValidationError("masker '" + tag_ + "' needs max scale > 1");
  }
  embeddings_.reserve(tasks);
  for (std::size_t t = 0; t < tasks; ++t) {
    embeddings_.emplace_back(tag_ + ".embedding." + std::to_string(t),
                             Tensor(Shape{features}, 1.0));
  }
}

void HATMasker::check_task(TaskId t) const {
  if (t >= embeddings_.size()) {
    throw std::out_of_range("masker '" + tag_ + "': task " + std::to_string(t) +
                            " outside [0," + std::to_string(embeddings_.size()) +
                            ")");
  }
}

Parameter& HATMasker::embedding(TaskId t) {
  check_task(t);
  return embeddings_[t];
}

const Parameter& HATMasker::embedding(TaskId t) const {
  check_task(t);
  return embeddings_[t];
}

bool HATMasker::finalized(TaskId t) const {
  check_task(t);
  return stored_[t].has_value();
}

std::vector<TaskId> HATMasker::finalized_tasks() const {
  std::vector<TaskId> out;
  for (TaskId t = 0; t < stored_.size(); ++t) {
    if (stored_[t]) out.push_back(t);
  }
  return out;
}

const std::vector<std::uint8_t>& HATMasker::stored_mask(TaskId t) const {
  if (!finalized(t)) {
    throw StateError("masker '" + tag_ + "': task " + std::to_string(t) +
                     " is not finalized");
  }
  return *stored_[t];
}

std::vector<double> HATMasker::mask(TaskId t, double scale) const {
  return attention(embedding(t).value().data(), scale);
}

std::vector<double> HATMasker::mask_at_max_scale(TaskId t) const {
  return mask(t, max_scale_);
}

void HATMasker::finalize(TaskId t) {
  if (finalized(t)) {
    throw StateError("masker '" + tag_ + "': task " + std::to_string(t) +
                     " finalized twice");
  }
  const std::vector<double> a = mask_at_max_scale(t);
  std::vector<std::uint8_t> binary(features_);
  for (std::size_t i = 0; i < features_; ++i) {
    cumulative_[i] = std::max(cumulative_[i], a[i]);
    binary[i] = a[i] > kBinaryThreshold ? 1 : 0;
  }
  stored_[t] = std::move(binary);
}

void HATMasker::clamp_embedding(TaskId t, double bound) {
  for (double& v : embedding(t).value().data()) v = std::clamp(v, -bound, bound);
}

void HATMasker::init_embedding(TaskId t, EmbeddingInit init,
                               std::mt19937_64& rng) {
  Tensor& e = embedding(t).value();
  if (init == EmbeddingInit::kOnes) {
    std::fill(e.data().begin(), e.data().end(), 1.0);
    return;
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& v : e.data()) v = normal(rng);
}

void HATMasker::init_embeddings(EmbeddingInit init, std::mt19937_64& rng) {
  for (TaskId t = 0; t < embeddings_.size(); ++t) init_embedding(t, init, rng);
}

void HATMasker::forget(TaskId t, EmbeddingInit init, std::mt19937_64& rng) {
  if (!finalized(t)) {
    throw StateError("masker '" + tag_ + "': cannot forget unfinalized task " +
                     std::to_string(t));
  }
  stored_[t].reset();
  init_embedding(t, init, rng);
  rebuild_cumulative();
}

void HATMasker::rebuild_cumulative() {
  std::fill(cumulative_.begin(), cumulative_.end(), 0.0);
  for (TaskId t = 0; t < stored_.size(); ++t) {
    if (!stored_[t]) continue;
    const std::vector<double> a = mask_at_max_scale(t);
    for (std::size_t i = 0; i < features_; ++i) {
      cumulative_[i] = std::max(cumulative_[i], a[i]);
    }
  }
}

void HATMasker::restore(
    std::vector<double> cumulative,
    std::vector<std::optional<std::vector<std::uint8_t>>> stored) {
  if (cumulative.size() != features_ || stored.size() != embeddings_.size()) {
    throw DimensionError("masker '" + tag_ + "': restored state has wrong size");
  }
  for (const auto& s : stored) {
    if (s && s->size() != features_) {
      throw DimensionError("masker '" + tag_ + "': restored task mask has wrong size");
    }
  }
  cumulative_ = std::move(cumulative);
  stored_ = std::move(stored);
}

}  // namespace hatcl
