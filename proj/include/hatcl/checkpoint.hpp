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

// Binary checkpoint of named arrays.
//
//   magic        "HATCKPT1"
//   u64          entry count
//   per entry:   u32 name length, UTF-8 name bytes,
//                u8 dtype (0 = f64, 1 = f32, 2 = u8 bitmask),
//                u32 rank, rank x u64 extents,
//                raw element payload
//
// All integers and floats are little-endian.

#ifndef HATCL_CHECKPOINT_HPP_
#define HATCL_CHECKPOINT_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "hatcl/network.hpp"

namespace hatcl {

enum class DType : std::uint8_t { kF64 = 0, kF32 = 1, kU8 = 2 };

struct CheckpointEntry {
  std::string name;
  DType dtype = DType::kF64;
  Shape shape;
  std::vector<double> reals;        // f64 / f32 entries
  std::vector<std::uint8_t> bytes;  // u8 entries
};

class Checkpoint {
 public:
  static constexpr std::string_view kMagic = "HATCKPT1";

  void add_tensor(const std::string& name, const Tensor& tensor,
                  DType dtype = DType::kF64);
  void add_bytes(const std::string& name, Shape shape,
                 std::vector<std::uint8_t> bytes);
  void add_text(const std::string& name, const std::string& text);

  bool contains(const std::string& name) const;
  const CheckpointEntry& entry(const std::string& name) const;
  Tensor tensor(const std::string& name) const;
  std::string text(const std::string& name) const;
  const std::vector<CheckpointEntry>& entries() const { return entries_; }

  std::string serialize() const;
  static Checkpoint parse(std::string_view bytes);

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);

 private:
  void add(CheckpointEntry entry);

  std::vector<CheckpointEntry> entries_;
};

// Parameters, buffers and masker state of `net`.
void save_network(Network& net, Checkpoint& ckpt, DType dtype = DType::kF64);
// Inverse of save_network; shapes must match the network's.
void load_network(Network& net, const Checkpoint& ckpt);

}  // namespace hatcl

#endif  // HATCL_CHECKPOINT_HPP_
