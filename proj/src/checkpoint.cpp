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

#include "hatcl/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>

#include "hatcl/errors.hpp"

namespace hatcl {
namespace {

template <typename T>
void put_le(std::string& out, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
            std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint8_t>>;
  const U bits = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
  }
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
              std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint8_t>>;
    need(sizeof(U));
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      bits |= static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(U);
    return std::bit_cast<T>(bits);
  }

  std::string_view take(std::size_t n) {
    need(n);
    std::string_view out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw IoError("checkpoint truncated");
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

std::string masker_key(const HATMasker& m, const std::string& field) {
  return "masker." + m.tag() + "." + field;
}

}  // namespace

void Checkpoint::add(CheckpointEntry entry) {
  if (contains(entry.name)) {
    throw UsageError("checkpoint already has entry '" + entry.name + "'");
  }
  entries_.push_back(std::move(entry));
}

void Checkpoint::add_tensor(const std::string& name, const Tensor& tensor,
                            DType dtype) {
  if (dtype == DType::kU8) throw UsageError("add_tensor: use add_bytes for u8");
  CheckpointEntry e{name, dtype, tensor.shape(), tensor.values(), {}};
  if (dtype == DType::kF32) {
    for (double& v : e.reals) v = static_cast<double>(static_cast<float>(v));
  }
  add(std::move(e));
}

void Checkpoint::add_bytes(const std::string& name, Shape shape,
                           std::vector<std::uint8_t> bytes) {
  if (shape_numel(shape) != bytes.size()) {
    throw DimensionError("add_bytes: shape " + shape_string(shape) +
                         " does not match " + std::to_string(bytes.size()) +
                         " bytes");
  }
  add(CheckpointEntry{name, DType::kU8, std::move(shape), {}, std::move(bytes)});
}

void Checkpoint::add_text(const std::string& name, const std::string& text) {
  add_bytes(name, Shape{text.size()}, std::vector<std::uint8_t>(text.begin(), text.end()));
}

bool Checkpoint::contains(const std::string& name) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const CheckpointEntry& e) { return e.name == name; });
}

const CheckpointEntry& Checkpoint::entry(const std::string& name) const {
  for (const CheckpointEntry& e : entries_) {
    if (e.name == name) return e;
  }
  throw UsageError("checkpoint has no entry '" + name + "'");
}

Tensor Checkpoint::tensor(const std::string& name) const {
  const CheckpointEntry& e = entry(name);
  if (e.dtype == DType::kU8) {
    return Tensor(e.shape, std::vector<double>(e.bytes.begin(), e.bytes.end()));
  }
  return Tensor(e.shape, e.reals);
}

std::string Checkpoint::text(const std::string& name) const {
  const CheckpointEntry& e = entry(name);
  if (e.dtype != DType::kU8) throw UsageError("entry '" + name + "' is not text");
  return std::string(e.bytes.begin(), e.bytes.end());
}

std::string Checkpoint::serialize() const {
  std::string out(kMagic);
  put_le<std::uint64_t>(out, entries_.size());
  for (const CheckpointEntry& e : entries_) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(e.name.size()));
    out += e.name;
    put_le<std::uint8_t>(out, static_cast<std::uint8_t>(e.dtype));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(e.shape.size()));
    for (std::size_t extent : e.shape) put_le<std::uint64_t>(out, extent);
    switch (e.dtype) {
      case DType::kF64:
        for (double v : e.reals) put_le<double>(out, v);
        break;
      case DType::kF32:
        for (double v : e.reals) put_le<float>(out, static_cast<float>(v));
        break;
      case DType::kU8:
        out.append(e.bytes.begin(), e.bytes.end());
        break;
    }
  }
  return out;
}

Checkpoint Checkpoint::parse(std::string_view bytes) {
  Reader in(bytes);
  if (in.take(kMagic.size()) != kMagic) throw IoError("not a HATCKPT1 checkpoint");
  Checkpoint ckpt;
  const auto count = in.get<std::uint64_t>();
  for (std::uint64_t k = 0; k < count; ++k) {
    CheckpointEntry e;
    e.name = std::string(in.take(in.get<std::uint32_t>()));
    const auto code = in.get<std::uint8_t>();
    if (code > 2) throw IoError("checkpoint entry '" + e.name + "' has bad dtype");
    e.dtype = static_cast<DType>(code);
    const auto rank = in.get<std::uint32_t>();
    for (std::uint32_t d = 0; d < rank; ++d) {
      e.shape.push_back(static_cast<std::size_t>(in.get<std::uint64_t>()));
    }
    const std::size_t n = shape_numel(e.shape);
    if (e.dtype == DType::kU8) {
      const std::string_view raw = in.take(n);
      e.bytes.assign(raw.begin(), raw.end());
    } else {
      e.reals.reserve(n);
      for (std::size_t i = 0; i < n; ++i) {
        e.reals.push_back(e.dtype == DType::kF64
                              ? in.get<double>()
                              : static_cast<double>(in.get<float>()));
      }
    }
    ckpt.add(std::move(e));
  }
  if (!in.done()) throw IoError("checkpoint has trailing bytes");
  return ckpt;
}

void Checkpoint::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint '" + path + "'");
  const std::string bytes = serialize();
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing checkpoint '" + path + "'");
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint '" + path + "'");
  const std::string bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  return parse(bytes);
}

void save_network(Network& net, Checkpoint& ckpt, DType dtype) {
  for (const NamedTensor& n : net.state()) ckpt.add_tensor(n.name, *n.tensor, dtype);
  for (const HATMasker* m : net.maskers()) {
    const std::size_t tasks = m->task_count(), features = m->features();
    std::vector<double> rows;
    rows.reserve(tasks * features);
    for (TaskId t = 0; t < tasks; ++t) {
      const auto& e = m->embedding(t).value().values();
      rows.insert(rows.end(), e.begin(), e.end());
    }
    ckpt.add_tensor(masker_key(*m, "embedding"), Tensor({tasks, features}, rows), dtype);
    ckpt.add_tensor(masker_key(*m, "cumulative"),
                    Tensor({features}, m->cumulative_mask()), dtype);
    for (TaskId t : m->finalized_tasks()) {
      ckpt.add_bytes(masker_key(*m, "task_mask." + std::to_string(t)), {features},
                     m->stored_mask(t));
    }
  }
}

void load_network(Network& net, const Checkpoint& ckpt) {
  auto fetch = [&](const std::string& name, const Shape& shape) {
    Tensor t = ckpt.tensor(name);
    if (t.shape() != shape) {
      throw DimensionError("checkpoint entry '" + name + "' has shape " +
                           shape_string(t.shape()) + ", network expects " +
                           shape_string(shape));
    }
    return t;
  };
  for (const NamedTensor& n : net.state()) {
    *n.tensor = fetch(n.name, n.tensor->shape());
  }
  for (HATMasker* m : net.maskers()) {
    const std::size_t tasks = m->task_count(), features = m->features();
    const Tensor rows = fetch(masker_key(*m, "embedding"), {tasks, features});
    for (TaskId t = 0; t < tasks; ++t) {
      auto dst = m->embedding(t).value().data();
      std::copy_n(rows.data().begin() + static_cast<std::ptrdiff_t>(t * features),
                  features, dst.begin());
    }
    const Tensor cumulative = fetch(masker_key(*m, "cumulative"), {features});
    std::vector<std::optional<std::vector<std::uint8_t>>> stored(tasks);
    for (TaskId t = 0; t < tasks; ++t) {
      const std::string key = masker_key(*m, "task_mask." + std::to_string(t));
      if (!ckpt.contains(key)) continue;
      const CheckpointEntry& e = ckpt.entry(key);
      if (e.dtype != DType::kU8 || e.shape != Shape{features}) {
        throw DimensionError("checkpoint entry '" + key + "' is malformed");
      }
      stored[t] = e.bytes;
    }
    m->restore(cumulative.values(), std::move(stored));
  }
}

}  // namespace hatcl
