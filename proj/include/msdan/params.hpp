// Copyright 2026 The MSDAN Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "msdan/tensor.hpp"

namespace msdan::ag {

// Named, ordered collection of model state. Trainable entries are parameters
// (requires_grad on); the rest are buffers such as batch-norm running stats.
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Tensor tensor;
    bool trainable = true;
  };

  ParamStore() = default;
  ParamStore(ParamStore&&) = default;
  ParamStore& operator=(ParamStore&&) = default;
  // Copies would alias tensors; use clone().
  ParamStore(const ParamStore&) = delete;
  ParamStore& operator=(const ParamStore&) = delete;

  // Throws Errc::ConfigError on a duplicate name. The reference is valid
  // until the next add().
  Tensor& add(std::string name, Tensor tensor, bool trainable = true);

  // Throws Errc::ConfigError for unknown names.
  Tensor& get(std::string_view name);
  const Tensor& get(std::string_view name) const;
  bool contains(std::string_view name) const;

  std::span<Entry> entries() { return entries_; }
  std::span<const Entry> entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  // Number of trainable scalars.
  std::size_t parameter_count() const;
  void zero_grad();

  // Deep copy with fresh, graph-free leaves.
  ParamStore clone() const;
  // Overwrites values (not grads) from a store with identical names/shapes.
  void assign_values(const ParamStore& other);

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Checkpoint container: "MSDANCKP", u32 version, u64 entry count, then per
// entry: u32 name length, UTF-8 name, u32 rank, u64 dims, float64
// little-endian payload. Decoded entries whose names end in "running_mean" or
// "running_var" come back as buffers.
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::byte> encode_checkpoint(const ParamStore& store);
ParamStore decode_checkpoint(std::span<const std::byte> bytes);

void save_checkpoint(const std::filesystem::path& path, const ParamStore& store);
ParamStore load_checkpoint(const std::filesystem::path& path);

// Copies every entry of `loaded` into `target`; names and shapes must match
// exactly. Throws Errc::MalformedCheckpoint.
void restore_into(ParamStore& target, const ParamStore& loaded);

}  // namespace msdan::ag
