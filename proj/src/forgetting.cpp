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

#include "hatcl/forgetting.hpp"

#include <sstream>

#include "hatcl/errors.hpp"

namespace hatcl {
namespace {

std::vector<bool> used_units(const HATMasker& masker, TaskId t, double threshold) {
  std::vector<bool> out(masker.features());
  if (threshold == kBinaryThreshold) {
    const auto& stored = masker.stored_mask(t);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = stored[i] != 0;
    return out;
  }
  masker.stored_mask(t);  // finalized check
  const std::vector<double> a = masker.mask_at_max_scale(t);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] > threshold;
  return out;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

std::string format_report(const ForgetReport& report) {
  std::ostringstream out;
  for (const auto& [tag, count] : report.layers) {
    out << tag << "=weights:" << count.weights << ",biases:" << count.biases << "\n";
  }
  out << "total=" << report.total << "\n";
  return out.str();
}

Attribution attribution(const HATMasker& masker, TaskId t, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ValidationError("attribution threshold must lie in (0, 1)");
  }
  Attribution out;
  out.usage = used_units(masker, t, threshold);
  out.exclusive = out.usage;
  for (TaskId other : masker.finalized_tasks()) {
    if (other == t) continue;
    const std::vector<bool> used = used_units(masker, other, threshold);
    for (std::size_t i = 0; i < used.size(); ++i) {
      if (used[i]) out.exclusive[i] = false;
    }
  }
  return out;
}

ForgetReport forget_task(Network& net, TaskId t, const ForgetOptions& options) {
  const std::vector<HATMasker*> maskers = net.maskers();
  if (maskers.empty()) throw StateError("forget_task: network has no maskers");
  for (const HATMasker* m : maskers) {
    if (!m->finalized(t)) {
      throw StateError("forget_task: task " + std::to_string(t) +
                       " is not finalized in '" + m->tag() + "'");
    }
  }

  // Decide everything against the pre-forget state.
  std::map<const HATMasker*, std::vector<bool>> exclusive;
  for (const HATMasker* m : maskers) {
    exclusive[m] = attribution(*m, t, options.threshold).exclusive;
  }

  ForgetReport report;
  for (const LayerLink& link : net.layer_links()) {
    HatLayer& layer = *link.layer;
    const std::vector<bool>& out_excl = exclusive.at(&layer.masker());
    std::vector<bool> in_excl(layer.fan_in(), true);
    if (link.preceding != nullptr) {
      const std::vector<bool>& units = exclusive.at(link.preceding);
      std::vector<double> as_double(units.begin(), units.end());
      const std::vector<double> spread = expand_units(as_double, layer.fan_in());
      for (std::size_t j = 0; j < in_excl.size(); ++j) in_excl[j] = spread[j] != 0.0;
    }

    LayerForgetCount& count = report.layers[layer.tag()];
    Tensor& w = layer.weight().value();
    const std::size_t outs = w.dim(0), ins = w.dim(1);
    const std::size_t taps = w.numel() / (outs * ins);
    for (std::size_t i = 0; i < outs; ++i) {
      if (!out_excl[i]) continue;
      for (std::size_t j = 0; j < ins; ++j) {
        if (!in_excl[j]) continue;
        for (std::size_t k = 0; k < taps; ++k) {
          double& v = w[(i * ins + j) * taps + k];
          if (v != 0.0) ++count.weights;
          v = 0.0;
        }
      }
      double& b = layer.bias().value()[i];
      if (b != 0.0) ++count.biases;
      b = 0.0;
    }
  }

  for (TaskIndexedBase* module : net.task_modules()) {
    if (t >= module->task_count()) continue;
    const std::vector<Parameter*> params = module->task_parameters(t);
    std::vector<Tensor> before;
    for (const Parameter* p : params) before.push_back(p->value());
    module->clear(t);
    LayerForgetCount& count = report.layers[module->tag()];
    for (std::size_t k = 0; k < params.size(); ++k) {
      const bool is_bias =
          ends_with(params[k]->name(), "bias") || ends_with(params[k]->name(), "beta");
      const Tensor& after = params[k]->value();
      for (std::size_t i = 0; i < after.numel(); ++i) {
        if (before[k][i] != 0.0 && after[i] == 0.0) {
          ++(is_bias ? count.biases : count.weights);
        }
      }
    }
  }

  std::mt19937_64 rng(options.seed);
  for (HATMasker* m : maskers) m->forget(t, options.init, rng);

  for (const auto& [tag, count] : report.layers) {
    report.total += count.weights + count.biases;
  }
  return report;
}

}  // namespace hatcl
