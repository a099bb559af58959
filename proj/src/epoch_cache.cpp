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

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include "msdan/edf.hpp"
#include "msdan/error.hpp"

namespace msdan::edf {

namespace {

constexpr std::array<char, 8> kMagic = {'M', 'S', 'D', 'A', 'N', 'E', 'P', 'C'};

static_assert(std::endian::native == std::endian::little,
              "cache I/O assumes a little-endian host");

template <typename T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::ifstream& in, const std::filesystem::path& path) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) {
    throw Error(Errc::MalformedCache, "truncated cache " + path.string());
  }
  return v;
}

}  // namespace

void write_epoch_cache(const std::filesystem::path& path,
                       std::span<const LabeledEpoch> epochs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, kCacheVersion);
  put<std::uint64_t>(out, epochs.size());
  for (const auto& e : epochs) {
    if (e.samples.size() != kCacheEpochSamples) {
      throw Error(Errc::SampleRateMismatch,
                  "cache holds 3000-sample epochs, got " + std::to_string(e.samples.size()));
    }
    put<std::uint8_t>(out, static_cast<std::uint8_t>(stage_code(e.label)));
    out.write(reinterpret_cast<const char*>(e.samples.data()),
              static_cast<std::streamsize>(e.samples.size() * sizeof(float)));
  }
  if (!out) throw Error(Errc::IoError, "write failed for " + path.string());
}

std::vector<LabeledEpoch> read_epoch_cache(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw Error(Errc::MalformedCache, "bad magic in " + path.string());
  }
  const auto version = get<std::uint32_t>(in, path);
  if (version != kCacheVersion) {
    throw Error(Errc::MalformedCache, "unsupported cache version " + std::to_string(version));
  }
  const auto count = get<std::uint64_t>(in, path);
  std::vector<LabeledEpoch> epochs;
  epochs.reserve(static_cast<std::size_t>(count));
  for (std::uint64_t i = 0; i < count; ++i) {
    LabeledEpoch e;
    const auto code = stage_from_code(get<std::uint8_t>(in, path));
    if (!code) throw Error(Errc::MalformedCache, "bad label byte in " + path.string());
    e.label = *code;
    e.epoch_index = static_cast<int>(i);
    e.samples.resize(kCacheEpochSamples);
    if (!in.read(reinterpret_cast<char*>(e.samples.data()),
                 static_cast<std::streamsize>(kCacheEpochSamples * sizeof(float)))) {
      throw Error(Errc::MalformedCache, "truncated cache " + path.string());
    }
    epochs.push_back(std::move(e));
  }
  return epochs;
}

}  // namespace msdan::edf
