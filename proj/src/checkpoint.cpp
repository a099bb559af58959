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

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "msdan/error.hpp"
#include "msdan/params.hpp"

namespace msdan::ag {

namespace {

constexpr std::array<char, 8> kMagic = {'M', 'S', 'D', 'A', 'N', 'C', 'K', 'P'};

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

template <typename T>
void put(std::vector<std::byte>& out, const T& v) {
  const auto* p = reinterpret_cast<const std::byte*>(&v);
  out.insert(out.end(), p, p + sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::span<const std::byte> bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    T v{};
    std::memcpy(&v, take(sizeof(T)), sizeof(T));
    return v;
  }

  const std::byte* take(std::size_t n) {
    if (pos_ + n > bytes_.size()) {
      throw Error(Errc::MalformedCheckpoint, "checkpoint truncated");
    }
    const std::byte* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::span<const std::byte> bytes_;
  std::size_t pos_ = 0;
};

bool is_buffer_name(std::string_view name) {
  return name.ends_with("running_mean") || name.ends_with("running_var");
}

}  // namespace

Tensor& ParamStore::add(std::string name, Tensor tensor, bool trainable) {
  if (index_.contains(name)) {
    throw Error(Errc::ConfigError, "duplicate parameter name '" + name + "'");
  }
  tensor.set_requires_grad(trainable);
  index_.emplace(name, entries_.size());
  entries_.push_back({std::move(name), std::move(tensor), trainable});
  return entries_.back().tensor;
}

Tensor& ParamStore::get(std::string_view name) {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) {
    throw Error(Errc::ConfigError, "unknown parameter '" + std::string(name) + "'");
  }
  return entries_[it->second].tensor;
}

const Tensor& ParamStore::get(std::string_view name) const {
  return const_cast<ParamStore*>(this)->get(name);
}

bool ParamStore::contains(std::string_view name) const {
  return index_.contains(std::string(name));
}

std::size_t ParamStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) {
    if (e.trainable) n += e.tensor.numel();
  }
  return n;
}

void ParamStore::zero_grad() {
  for (auto& e : entries_) e.tensor.zero_grad();
}

ParamStore ParamStore::clone() const {
  ParamStore out;
  for (const auto& e : entries_) out.add(e.name, e.tensor.detach(), e.trainable);
  return out;
}

void ParamStore::assign_values(const ParamStore& other) {
  if (other.size() != size()) {
    throw Error(Errc::ConfigError, "parameter stores differ in size");
  }
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& src = other.entries_[i];
    auto& dst = entries_[i];
    if (src.name != dst.name || src.tensor.shape() != dst.tensor.shape()) {
      throw Error(Errc::ConfigError, "parameter stores differ at '" + dst.name + "'");
    }
    std::copy(src.tensor.values().begin(), src.tensor.values().end(),
              dst.tensor.mutable_values().begin());
  }
}

std::vector<std::byte> encode_checkpoint(const ParamStore& store) {
  std::vector<std::byte> out;
  for (char c : kMagic) out.push_back(static_cast<std::byte>(c));
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, store.size());
  for (const auto& e : store.entries()) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(e.name.size()));
    for (char c : e.name) out.push_back(static_cast<std::byte>(c));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(e.tensor.rank()));
    for (std::size_t d : e.tensor.shape()) put<std::uint64_t>(out, d);
    const auto* p = reinterpret_cast<const std::byte*>(e.tensor.values().data());
    out.insert(out.end(), p, p + e.tensor.numel() * sizeof(double));
  }
  return out;
}

ParamStore decode_checkpoint(std::span<const std::byte> bytes) {
  Reader in(bytes);
  const std::byte* magic = in.take(kMagic.size());
  if (!std::equal(kMagic.begin(), kMagic.end(), magic,
                  [](char a, std::byte b) { return static_cast<std::byte>(a) == b; })) {
    throw Error(Errc::MalformedCheckpoint, "bad magic");
  }
  const auto version = in.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw Error(Errc::MalformedCheckpoint, "unsupported version " + std::to_string(version));
  }
  const auto count = in.get<std::uint64_t>();
  ParamStore store;
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto name_len = in.get<std::uint32_t>();
    const auto* name_bytes = reinterpret_cast<const char*>(in.take(name_len));
    std::string name(name_bytes, name_len);
    const auto rank = in.get<std::uint32_t>();
    if (rank > 8) throw Error(Errc::MalformedCheckpoint, "implausible rank for " + name);
    Shape shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(in.get<std::uint64_t>());
    std::vector<double> values(numel(shape));
    std::memcpy(values.data(), in.take(values.size() * sizeof(double)),
                values.size() * sizeof(double));
    const bool trainable = !is_buffer_name(name);
    store.add(std::move(name), Tensor(std::move(shape), std::move(values)), trainable);
  }
  if (!in.done()) throw Error(Errc::MalformedCheckpoint, "trailing bytes");
  return store;
}

void save_checkpoint(const std::filesystem::path& path, const ParamStore& store) {
  const auto bytes = encode_checkpoint(store);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::IoError, "write failed for " + path.string());
}

ParamStore load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  std::vector<char> chars((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(std::as_bytes(std::span<const char>(chars)));
}

void restore_into(ParamStore& target, const ParamStore& loaded) {
  if (loaded.size() != target.size()) {
    throw Error(Errc::MalformedCheckpoint,
                "checkpoint has " + std::to_string(loaded.size()) + " entries, model needs " +
                    std::to_string(target.size()));
  }
  for (const auto& e : loaded.entries()) {
    if (!target.contains(e.name)) {
      throw Error(Errc::MalformedCheckpoint, "unexpected entry '" + e.name + "'");
    }
    Tensor& dst = target.get(e.name);
    if (dst.shape() != e.tensor.shape()) {
      throw Error(Errc::MalformedCheckpoint, "shape mismatch for '" + e.name + "': " +
                                                 shape_str(e.tensor.shape()) + " vs " +
                                                 shape_str(dst.shape()));
    }
    std::copy(e.tensor.values().begin(), e.tensor.values().end(),
              dst.mutable_values().begin());
  }
}

}  // namespace msdan::ag
