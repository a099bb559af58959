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
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "msdan/model.hpp"
#include "msdan/preprocess.hpp"
#include "msdan/training.hpp"

namespace msdan::config {

inline constexpr std::string_view kDatasetRootEnv = "MSDAN_DATASET_ROOT";

enum class SplitKind { KFold, Holdout };

struct SplitConfig {
  SplitKind kind = SplitKind::KFold;
  std::size_t k = 5;
  double ratio = 0.8;
  // KFold only: run a single fold instead of all k.
  std::optional<std::size_t> fold;

  friend bool operator==(const SplitConfig&, const SplitConfig&) = default;
};

// "kfold:5", "kfold:5:2" (fold 2 only) or "holdout:0.8". Throws
// Errc::ConfigError.
SplitConfig parse_split(std::string_view text);
std::string split_to_string(const SplitConfig& split);

struct RunConfig {
  std::filesystem::path dataset_root = "data";
  std::filesystem::path output_dir = "out";
  std::string channel = "EEG Fpz-Cz";
  std::uint64_t seed = 0;
  // 0 means every recording found under dataset_root.
  std::size_t max_recordings = 0;
  // Worker threads for preprocessing; 0 picks hardware concurrency.
  std::size_t workers = 0;
  SplitConfig split;
  model::ModelConfig model;
  train::TrainConfig train;
  preprocess::AugmentConfig augment;
};

// Flat "key = value" lines; "[section]" headers prefix later keys with
// "section.". '#' starts a comment. Every key must be known and every value
// must parse, otherwise Errc::ConfigError.
using KeyValues = std::map<std::string, std::string>;
KeyValues parse_key_values(std::string_view text);

RunConfig run_config_from(const KeyValues& kv, RunConfig base = {});
RunConfig parse_run_config(std::string_view text);
RunConfig load_run_config(const std::filesystem::path& path);
// Full resolved form; parse_run_config(to_text(c)) reproduces c.
std::string to_text(const RunConfig& cfg);

// Overwrites dataset_root from the environment when the variable is set.
void apply_environment(RunConfig& cfg);
// Checks values and cross-field consistency; Errc::ConfigError.
void validate(const RunConfig& cfg);

// Written next to each checkpoint so inference can reject incompatible inputs.
struct ModelManifest {
  model::ModelConfig model;
  std::string channel;
  std::uint32_t cache_version = 0;

  friend bool operator==(const ModelManifest&, const ModelManifest&) = default;
};

std::string manifest_to_text(const ModelManifest& m);
ModelManifest parse_manifest(std::string_view text);
std::filesystem::path manifest_path_for(const std::filesystem::path& checkpoint);
void save_manifest(const std::filesystem::path& checkpoint, const ModelManifest& m);
// Throws Errc::ConfigMismatch when the manifest is missing.
ModelManifest load_manifest(const std::filesystem::path& checkpoint);

}  // namespace msdan::config
