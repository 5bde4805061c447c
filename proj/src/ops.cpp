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

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hatcl/autograd.hpp"
#include "hatcl/errors.hpp"

namespace hatcl {
namespace {

// [outer, channels, inner] view of a rank>=2 tensor around axis 1.
struct ChannelLayout {
  std::size_t outer = 1;
  std::size_t channels = 1;
  std::size_t inner = 1;

  explicit ChannelLayout(const Shape& shape) {
    if (shape.size() < 2) {
      channels = shape.empty() ? 1 : shape[0];
      return;
    }
    outer = shape[0];
    channels = shape[1];
    inner = shape_numel(shape) / (outer * channels);
  }
  std::size_t channel_of(std::size_t flat) const {
    return (flat / inner) % channels;
  }
};

enum class Pairing { kSame, kChannel };

Pairing pair_shapes(const Shape& a, const Shape& b, const char* op) {
  if (a == b) return Pairing::kSame;
  if (b.size() == 1 && a.size() >= 2 && a[1] == b[0]) return Pairing::kChannel;
  throw DimensionError(std::string(op) + ": incompatible shapes " +
                       shape_string(a) + " and " + shape_string(b));
}

// Sums a full-shape gradient down to the per-channel vector shape.
Tensor reduce_to_channels(const Tensor& g, std::size_t channels) {
  ChannelLayout layout(g.shape());
  Tensor out(Shape{channels});
  for (std::size_t i = 0; i < g.numel(); ++i) out[layout.channel_of(i)] += g[i];
  return out;
}

Tape& same_tape(Var a, Var b, const char* op) {
  if (&a.tape() != &b.tape()) {
    throw UsageError(std::string(op) + ": operands live on different tapes");
  }
  return a.tape();
}

template <typename Fn>
Var unary(Var a, Fn&& fn, BackwardFn backward) {
  const Tensor& x = a.value();
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) out[i] = fn(x[i]);
  return a.tape().record(std::move(out), {a.id()}, std::move(backward));
}

}  // namespace

Var add(Var a, Var b) {
  Tape& tape = same_tape(a, b, "add");
  const Pairing pairing = pair_shapes(a.shape(), b.shape(), "add");
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  Tensor out = x;
  if (pairing == Pairing::kSame) {
    out += y;
  } else {
    ChannelLayout layout(x.shape());
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] += y[layout.channel_of(i)];
  }
  const std::size_t channels = y.numel();
  return tape.record(std::move(out), {a.id(), b.id()},
                     [pairing, channels](const Tensor& g, GradSink& sink) {
                       sink.accumulate(0, g);
                       if (!sink.wants(1)) return;
                       sink.accumulate(1, pairing == Pairing::kSame
                                              ? g
                                              : reduce_to_channels(g, channels));
                     });
}

Var sub(Var a, Var b) {
  Tape& tape = same_tape(a, b, "sub");
  const Pairing pairing = pair_shapes(a.shape(), b.shape(), "sub");
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  Tensor out = x;
  ChannelLayout layout(x.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) {
    out[i] -= pairing == Pairing::kSame ? y[i] : y[layout.channel_of(i)];
  }
  const std::size_t channels = y.numel();
  return tape.record(std::move(out), {a.id(), b.id()},
                     [pairing, channels](const Tensor& g, GradSink& sink) {
                       sink.accumulate(0, g);
                       if (!sink.wants(1)) return;
                       Tensor neg = g;
                       for (double& v : neg.data()) v = -v;
                       sink.accumulate(1, pairing == Pairing::kSame
                                              ? neg
                                              : reduce_to_channels(neg, channels));
                     });
}

Var mul(Var a, Var b) {
  if (a.shape().size() == 1 && b.shape().size() >= 2) std::swap(a, b);
  Tape& tape = same_tape(a, b, "mul");
  const Pairing pairing = pair_shapes(a.shape(), b.shape(), "mul");
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  ChannelLayout layout(x.shape());
  Tensor out(x.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) {
    out[i] = x[i] * (pairing == Pairing::kSame ? y[i] : y[layout.channel_of(i)]);
  }
  Tape* tp = &tape;
  const NodeId ia = a.id();
  const NodeId ib = b.id();
  return tape.record(
      std::move(out), {ia, ib},
      [tp, ia, ib, pairing, layout](const Tensor& g, GradSink& sink) {
        const Tensor& x = tp->value(ia);
        const Tensor& y = tp->value(ib);
        if (sink.wants(0)) {
          Tensor gx(x.shape());
          for (std::size_t i = 0; i < g.numel(); ++i) {
            gx[i] = g[i] * (pairing == Pairing::kSame ? y[i]
                                                      : y[layout.channel_of(i)]);
          }
          sink.accumulate(0, gx);
        }
        if (sink.wants(1)) {
          Tensor gy(y.shape());
          for (std::size_t i = 0; i < g.numel(); ++i) {
            if (pairing == Pairing::kSame) {
              gy[i] = g[i] * x[i];
            } else {
              gy[layout.channel_of(i)] += g[i] * x[i];
            }
          }
          sink.accumulate(1, gy);
        }
      });
}

Var scale(Var a, double c) {
  return unary(a, [c](double v) { return c * v; },
               [c](const Tensor& g, GradSink& sink) {
                 Tensor out = g;
                 for (double& v : out.data()) v *= c;
                 sink.accumulate(0, out);
               });
}

Var shift(Var a, double c) {
  return unary(a, [c](double v) { return v + c; },
               [](const Tensor& g, GradSink& sink) { sink.accumulate(0, g); });
}

Var sigmoid(Var a) {
  const Tensor& x = a.value();
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) {
    const double v = x[i];
    // Branch on sign so exp never overflows.
    if (v >= 0) {
      out[i] = 1.0 / (1.0 + std::exp(-v));
    } else {
      const double e = std::exp(v);
      out[i] = e / (1.0 + e);
    }
  }
  Tensor saved = out;
  return a.tape().record(std::move(out), {a.id()},
                         [saved](const Tensor& g, GradSink& sink) {
                           Tensor dx(g.shape());
                           for (std::size_t i = 0; i < g.numel(); ++i) {
                             dx[i] = g[i] * saved[i] * (1.0 - saved[i]);
                           }
                           sink.accumulate(0, dx);
                         });
}

Var relu(Var a) {
  Tape* tp = &a.tape();
  const NodeId ia = a.id();
  return unary(a, [](double v) { return v > 0 ? v : 0.0; },
               [tp, ia](const Tensor& g, GradSink& sink) {
                 const Tensor& x = tp->value(ia);
                 Tensor dx(g.shape());
                 for (std::size_t i = 0; i < g.numel(); ++i) {
                   dx[i] = x[i] > 0 ? g[i] : 0.0;
                 }
                 sink.accumulate(0, dx);
               });
}

Var clamp(Var a, double lo, double hi) {
  if (lo > hi) throw ValidationError("clamp: lo must not exceed hi");
  Tape* tp = &a.tape();
  const NodeId ia = a.id();
  return unary(a, [lo, hi](double v) { return std::clamp(v, lo, hi); },
               [tp, ia, lo, hi](const Tensor& g, GradSink& sink) {
                 const Tensor& x = tp->value(ia);
                 Tensor dx(g.shape());
                 for (std::size_t i = 0; i < g.numel(); ++i) {
                   dx[i] = (x[i] >= lo && x[i] <= hi) ? g[i] : 0.0;
                 }
                 sink.accumulate(0, dx);
               });
}

Var matmul(Var a, Var b) {
  Tape& tape = same_tape(a, b, "matmul");
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.size() != 2 || sb.size() != 2 || sa[1] != sb[0]) {
    throw DimensionError("matmul: cannot multiply " + shape_string(sa) + " by " +
                         shape_string(sb));
  }
  const std::size_t m = sa[0], k = sa[1], n = sb[1];
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  Tensor out(Shape{m, n});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double xv = x[i * k + p];
      for (std::size_t j = 0; j < n; ++j) out[i * n + j] += xv * y[p * n + j];
    }
  }
  Tape* tp = &tape;
  const NodeId ia = a.id();
  const NodeId ib = b.id();
  return tape.record(std::move(out), {ia, ib},
                     [tp, ia, ib, m, k, n](const Tensor& g, GradSink& sink) {
                       const Tensor& x = tp->value(ia);
                       const Tensor& y = tp->value(ib);
                       if (sink.wants(0)) {
                         // dA = G * B^T
                         Tensor dx(Shape{m, k});
                         for (std::size_t i = 0; i < m; ++i) {
                           for (std::size_t p = 0; p < k; ++p) {
                             double acc = 0.0;
                             for (std::size_t j = 0; j < n; ++j) {
                               acc += g[i * n + j] * y[p * n + j];
                             }
                             dx[i * k + p] = acc;
                           }
                         }
                         sink.accumulate(0, dx);
                       }
                       if (sink.wants(1)) {
                         // dB = A^T * G
                         Tensor dy(Shape{k, n});
                         for (std::size_t i = 0; i < m; ++i) {
                           for (std::size_t p = 0; p < k; ++p) {
                             const double xv = x[i * k + p];
                             for (std::size_t j = 0; j < n; ++j) {
                               dy[p * n + j] += xv * g[i * n + j];
                             }
                           }
                         }
                         sink.accumulate(1, dy);
                       }
                     });
}

Var reshape(Var a, Shape shape) {
  const Shape from = a.shape();
  if (shape_numel(shape) != shape_numel(from)) {
    throw DimensionError("reshape: cannot view " + shape_string(from) + " as " +
                         shape_string(shape));
  }
  Tensor out(shape, a.value().values());
  return a.tape().record(std::move(out), {a.id()},
                         [from](const Tensor& g, GradSink& sink) {
                           sink.accumulate(0, Tensor(from, g.values()));
                         });
}

namespace {

Tensor permute_values(const Tensor& x, const std::vector<std::size_t>& axes) {
  const Shape& in_shape = x.shape();
  const std::size_t rank = in_shape.size();
  Shape out_shape(rank);
  for (std::size_t d = 0; d < rank; ++d) out_shape[d] = in_shape[axes[d]];

  std::vector<std::size_t> in_strides(rank, 1);
  for (std::size_t d = rank; d-- > 1;) {
    in_strides[d - 1] = in_strides[d] * in_shape[d];
  }
  Tensor out(out_shape);
  std::vector<std::size_t> idx(rank, 0);
  for (std::size_t flat = 0; flat < out.numel(); ++flat) {
    std::size_t src = 0;
    for (std::size_t d = 0; d < rank; ++d) src += idx[d] * in_strides[axes[d]];
    out[flat] = x[src];
    for (std::size_t d = rank; d-- > 0;) {
      if (++idx[d] < out_shape[d]) break;
      idx[d] = 0;
    }
  }
  return out;
}

}  // namespace

Var permute(Var a, std::vector<std::size_t> axes) {
  const std::size_t rank = a.shape().size();
  std::vector<std::size_t> check = axes;
  std::sort(check.begin(), check.end());
  bool valid = check.size() == rank;
  for (std::size_t d = 0; valid && d < rank; ++d) valid = check[d] == d;
  if (!valid) {
    throw DimensionError("permute: axes are not a permutation of rank " +
                         std::to_string(rank));
  }
  std::vector<std::size_t> inverse(rank);
  for (std::size_t d = 0; d < rank; ++d) inverse[axes[d]] = d;
  return a.tape().record(permute_values(a.value(), axes), {a.id()},
                         [inverse](const Tensor& g, GradSink& sink) {
                           sink.accumulate(0, permute_values(g, inverse));
                         });
}

Var transpose(Var a) {
  if (a.shape().size() != 2) {
    throw DimensionError("transpose: needs a matrix, got " +
                         shape_string(a.shape()));
  }
  return permute(a, {1, 0});
}

Var conv2d(Var input, Var weight, std::optional<Var> bias,
           Conv2dOptions options) {
  Tape& tape = same_tape(input, weight, "conv2d");
  const Shape& si = input.shape();
  const Shape& sw = weight.shape();
  if (si.size() != 4 || sw.size() != 4 || si[1] != sw[1]) {
    throw DimensionError("conv2d: input " + shape_string(si) +
                         " incompatible with weight " + shape_string(sw));
  }
  if (options.stride == 0) throw ValidationError("conv2d: stride must be >= 1");
  const std::size_t batch = si[0], cin = si[1], h = si[2], w = si[3];
  const std::size_t cout = sw[0], kh = sw[2], kw = sw[3];
  const std::size_t pad = options.padding, stride = options.stride;
  if (kh > h + 2 * pad || kw > w + 2 * pad) {
    throw DimensionError("conv2d: kernel " + shape_string(sw) +
                         " larger than padded input " + shape_string(si));
  }
  if (bias && (bias->shape().size() != 1 || bias->shape()[0] != cout)) {
    throw DimensionError("conv2d: bias " + shape_string(bias->shape()) +
                         " does not match " + std::to_string(cout) +
                         " output channels");
  }
  const std::size_t oh = (h + 2 * pad - kh) / stride + 1;
  const std::size_t ow = (w + 2 * pad - kw) / stride + 1;

  // Calls visit(out_flat, in_flat, weight_flat) for every contributing tap.
  auto for_each_tap = [=](auto&& visit) {
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t co = 0; co < cout; ++co)
        for (std::size_t y = 0; y < oh; ++y)
          for (std::size_t x = 0; x < ow; ++x) {
            const std::size_t o = ((b * cout + co) * oh + y) * ow + x;
            for (std::size_t ci = 0; ci < cin; ++ci)
              for (std::size_t ky = 0; ky < kh; ++ky) {
                const std::ptrdiff_t iy =
                    static_cast<std::ptrdiff_t>(y * stride + ky) -
                    static_cast<std::ptrdiff_t>(pad);
                if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
                for (std::size_t kx = 0; kx < kw; ++kx) {
                  const std::ptrdiff_t ix =
                      static_cast<std::ptrdiff_t>(x * stride + kx) -
                      static_cast<std::ptrdiff_t>(pad);
                  if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
                  const std::size_t in =
                      ((b * cin + ci) * h + static_cast<std::size_t>(iy)) * w +
                      static_cast<std::size_t>(ix);
                  const std::size_t wt = ((co * cin + ci) * kh + ky) * kw + kx;
                  visit(o, in, wt);
                }
              }
          }
  };

  const Tensor& xv = input.value();
  const Tensor& wv = weight.value();
  Tensor out(Shape{batch, cout, oh, ow});
  for_each_tap([&](std::size_t o, std::size_t in, std::size_t wt) {
    out[o] += xv[in] * wv[wt];
  });
  std::vector<NodeId> inputs{input.id(), weight.id()};
  if (bias) {
    same_tape(input, *bias, "conv2d");
    const Tensor& bv = bias->value();
    ChannelLayout layout(out.shape());
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] += bv[layout.channel_of(i)];
    inputs.push_back(bias->id());
  }
  Tape* tp = &tape;
  const NodeId ii = input.id();
  const NodeId iw = weight.id();
  const bool has_bias = bias.has_value();
  return tape.record(
      std::move(out), std::move(inputs),
      [tp, ii, iw, has_bias, cout, for_each_tap](const Tensor& g, GradSink& sink) {
        const Tensor& xv = tp->value(ii);
        const Tensor& wv = tp->value(iw);
        if (sink.wants(0)) {
          Tensor dx(xv.shape());
          for_each_tap([&](std::size_t o, std::size_t in, std::size_t wt) {
            dx[in] += g[o] * wv[wt];
          });
          sink.accumulate(0, dx);
        }
        if (sink.wants(1)) {
          Tensor dw(wv.shape());
          for_each_tap([&](std::size_t o, std::size_t in, std::size_t wt) {
            dw[wt] += g[o] * xv[in];
          });
          sink.accumulate(1, dw);
        }
        if (has_bias && sink.wants(2)) sink.accumulate(2, reduce_to_channels(g, cout));
      });
}

Var sum(Var a) {
  const Tensor& x = a.value();
  double total = 0.0;
  for (double v : x.data()) total += v;
  const Shape shape = x.shape();
  return a.tape().record(Tensor::scalar(total), {a.id()},
                         [shape](const Tensor& g, GradSink& sink) {
                           sink.accumulate(0, Tensor(shape, g.item()));
                         });
}

Var mean(Var a) {
  return scale(sum(a), 1.0 / static_cast<double>(a.value().numel()));
}

Var softmax_cross_entropy(Var logits, std::span<const int> labels) {
  const Shape& s = logits.shape();
  if (s.size() != 2) {
    throw DimensionError("softmax_cross_entropy: logits must be [B,C], got " +
                         shape_string(s));
  }
  const std::size_t batch = s[0], classes = s[1];
  if (labels.size() != batch) {
    throw DimensionError("softmax_cross_entropy: " + std::to_string(labels.size()) +
                         " labels for batch of " + std::to_string(batch));
  }
  for (int label : labels) {
    if (label < 0 || static_cast<std::size_t>(label) >= classes) {
      throw ValidationError("softmax_cross_entropy: label " +
                            std::to_string(label) + " outside [0," +
                            std::to_string(classes) + ")");
    }
  }
  const Tensor& z = logits.value();
  Tensor probs(s);
  double loss = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    const double* row = z.data().data() + b * classes;
    const double top = *std::max_element(row, row + classes);
    double denom = 0.0;
    for (std::size_t c = 0; c < classes; ++c) denom += std::exp(row[c] - top);
    const double log_denom = std::log(denom);
    for (std::size_t c = 0; c < classes; ++c) {
      probs[b * classes + c] = std::exp(row[c] - top - log_denom);
    }
    loss -= row[labels[b]] - top - log_denom;
  }
  loss /= static_cast<double>(batch);
  std::vector<int> saved_labels(labels.begin(), labels.end());
  return logits.tape().record(
      Tensor::scalar(loss), {logits.id()},
      [probs, saved_labels, batch, classes](const Tensor& g, GradSink& sink) {
        Tensor dz = probs;
        for (std::size_t b = 0; b < batch; ++b) {
          dz[b * classes + static_cast<std::size_t>(saved_labels[b])] -= 1.0;
        }
        const double factor = g.item() / static_cast<double>(batch);
        for (double& v : dz.data()) v *= factor;
        sink.accumulate(0, dz);
      });
}

Var standardize(Var a, NormAxes axes, double eps) {
  const Tensor& x = a.value();
  const Shape& shape = x.shape();
  ChannelLayout layout(shape);
  std::size_t groups = 1;
  std::function<std::size_t(std::size_t)> group_of = [](std::size_t) {
    return std::size_t{0};
  };
  if (shape.size() >= 2 && axes == NormAxes::kPerSample) {
    groups = shape[0];
    const std::size_t per = x.numel() / groups;
    group_of = [per](std::size_t i) { return i / per; };
  } else if (shape.size() >= 2) {
    groups = layout.channels;
    group_of = [layout](std::size_t i) { return layout.channel_of(i); };
  }
  const double count = static_cast<double>(x.numel() / groups);

  std::vector<double> mu(groups, 0.0), var(groups, 0.0);
  for (std::size_t i = 0; i < x.numel(); ++i) mu[group_of(i)] += x[i];
  for (double& m : mu) m /= count;
  for (std::size_t i = 0; i < x.numel(); ++i) {
    const double d = x[i] - mu[group_of(i)];
    var[group_of(i)] += d * d;
  }
  std::vector<double> inv_std(groups);
  for (std::size_t k = 0; k < groups; ++k) {
    inv_std[k] = 1.0 / std::sqrt(var[k] / count + eps);
  }
  Tensor out(shape);
  for (std::size_t i = 0; i < x.numel(); ++i) {
    const std::size_t k = group_of(i);
    out[i] = (x[i] - mu[k]) * inv_std[k];
  }
  Tensor normalized = out;
  return a.tape().record(
      std::move(out), {a.id()},
      [normalized, inv_std, group_of, groups, count](const Tensor& g,
                                                     GradSink& sink) {
        std::vector<double> mean_g(groups, 0.0), mean_gy(groups, 0.0);
        for (std::size_t i = 0; i < g.numel(); ++i) {
          mean_g[group_of(i)] += g[i];
          mean_gy[group_of(i)] += g[i] * normalized[i];
        }
        for (std::size_t k = 0; k < groups; ++k) {
          mean_g[k] /= count;
          mean_gy[k] /= count;
        }
        Tensor dx(g.shape());
        for (std::size_t i = 0; i < g.numel(); ++i) {
          const std::size_t k = group_of(i);
          dx[i] = inv_std[k] * (g[i] - mean_g[k] - normalized[i] * mean_gy[k]);
        }
        sink.accumulate(0, dx);
      });
}

}  // namespace hatcl
