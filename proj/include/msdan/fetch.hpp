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

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace msdan::fetch {

struct ManifestEntry {
  std::string sha256;  // lowercase hex
  std::optional<std::uint64_t> size;
  std::string path;  // relative to base_url and to the dataset root

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct DatasetManifest {
  std::string base_url;
  std::vector<ManifestEntry> files;
};

// First non-comment line "base_url <url>", then "<sha256> <size|-> <path>".
// Throws Errc::ConfigError.
DatasetManifest parse_manifest(std::string_view text);
DatasetManifest load_manifest(const std::filesystem::path& path);
std::string manifest_to_text(const DatasetManifest& manifest);

// Builds a manifest from a "<sha256>  <path>" checksum listing such as the
// SHA256SUMS.txt published next to a corpus. Only paths whose name matches
// one of `suffixes` are kept (all when empty).
DatasetManifest manifest_from_checksums(std::string base_url, std::string_view listing,
                                        std::span<const std::string> suffixes = {});

std::string sha256_hex(std::span<const std::byte> bytes);
// Throws Errc::IoError.
std::string sha256_file(const std::filesystem::path& path);

struct FetchOptions {
  std::size_t workers = 4;
  std::size_t max_attempts = 5;
  std::chrono::milliseconds initial_backoff{250};
  std::chrono::seconds timeout{60};
};

struct FetchReport {
  std::size_t already_valid = 0;
  std::size_t downloaded = 0;
  std::size_t bytes_transferred = 0;
};

// Downloads every manifest file missing or failing its checksum into `root`.
// Partial downloads are kept as "<file>.part" and resumed with HTTP range
// requests. Network errors are retried with exponential backoff. Throws
// Errc::NetworkFailure or Errc::ChecksumMismatch naming the failed files once
// every file has been attempted.
FetchReport fetch_dataset(const DatasetManifest& manifest, const std::filesystem::path& root,
                          const FetchOptions& options = {});

}  // namespace msdan::fetch
