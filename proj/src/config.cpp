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

#include "msdan/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include "msdan/edf.hpp"
#include "msdan/error.hpp"

namespace msdan::config {

namespace {

[[noreturn]] void fail(const std::string& why) { throw Error(Errc::ConfigError, why); }

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (text.empty() || ec != std::errc() || ptr != end) {
    fail("'" + std::string(key) + "' expects a number, got '" + std::string(text) + "'");
  }
  return value;
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  fail("'" + std::string(key) + "' expects true/false, got '" + std::string(text) + "'");
}

std::vector<std::size_t> parse_list(std::string_view key, std::string_view text) {
  std::vector<std::size_t> out;
  while (!text.empty()) {
    const auto comma = text.find(',');
    out.push_back(parse_number<std::size_t>(key, trim(text.substr(0, comma))));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  if (out.empty()) fail("'" + std::string(key) + "' expects a comma-separated list");
  return out;
}

std::string fmt(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, ptr);
}

std::string fmt(const std::vector<std::size_t>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(xs[i]);
  }
  return out;
}

using Setter = std::function<void(RunConfig&, std::string_view key, std::string_view value)>;

template <typename T, typename Target>
Setter number_field(T Target::*member, Target RunConfig::*section) {
  return [=](RunConfig& c, std::string_view k, std::string_view v) {
    (c.*section).*member = parse_number<T>(k, v);
  };
}

template <typename T>
Setter top_number(T RunConfig::*member) {
  return [=](RunConfig& c, std::string_view k, std::string_view v) {
    c.*member = parse_number<T>(k, v);
  };
}

const std::map<std::string, Setter, std::less<>>& setters() {
  using model::ModelConfig;
  using preprocess::AugmentConfig;
  using train::TrainConfig;
  static const std::map<std::string, Setter, std::less<>> table = {
      {"dataset_root", [](RunConfig& c, auto, auto v) { c.dataset_root = std::string(v); }},
      {"output_dir", [](RunConfig& c, auto, auto v) { c.output_dir = std::string(v); }},
      {"channel", [](RunConfig& c, auto, auto v) { c.channel = std::string(v); }},
      {"seed", top_number(&RunConfig::seed)},
      {"max_recordings", top_number(&RunConfig::max_recordings)},
      {"workers", top_number(&RunConfig::workers)},
      {"split", [](RunConfig& c, auto, auto v) { c.split = parse_split(v); }},
      {"model.branch_kernel_sizes",
       [](RunConfig& c, auto k, auto v) { c.model.branch_kernel_sizes = parse_list(k, v); }},
      {"model.branch_channels", number_field(&ModelConfig::branch_channels, &RunConfig::model)},
      {"model.attention_channels",
       number_field(&ModelConfig::attention_channels, &RunConfig::model)},
      {"model.attention_blocks", number_field(&ModelConfig::attention_blocks, &RunConfig::model)},
      {"model.channel_attention_reduction",
       number_field(&ModelConfig::channel_attention_reduction, &RunConfig::model)},
      {"model.spatial_kernel", number_field(&ModelConfig::spatial_kernel, &RunConfig::model)},
      {"model.pool_sizes",
       [](RunConfig& c, auto k, auto v) { c.model.pool_sizes = parse_list(k, v); }},
      {"model.num_classes", number_field(&ModelConfig::num_classes, &RunConfig::model)},
      {"model.input_length", number_field(&ModelConfig::input_length, &RunConfig::model)},
      {"model.bn_eps", number_field(&ModelConfig::bn_eps, &RunConfig::model)},
      {"model.bn_momentum", number_field(&ModelConfig::bn_momentum, &RunConfig::model)},
      {"train.learning_rate", number_field(&TrainConfig::learning_rate, &RunConfig::train)},
      {"train.batch_size", number_field(&TrainConfig::batch_size, &RunConfig::train)},
      {"train.adam_beta1", number_field(&TrainConfig::adam_beta1, &RunConfig::train)},
      {"train.adam_beta2", number_field(&TrainConfig::adam_beta2, &RunConfig::train)},
      {"train.adam_eps", number_field(&TrainConfig::adam_eps, &RunConfig::train)},
      {"train.max_training_passes",
       number_field(&TrainConfig::max_training_passes, &RunConfig::train)},
      {"train.checkpoint_every", number_field(&TrainConfig::checkpoint_every, &RunConfig::train)},
      {"train.augment",
       [](RunConfig& c, auto k, auto v) { c.train.augment = parse_bool(k, v); }},
      {"augment.flip_probability",
       number_field(&AugmentConfig::flip_probability, &RunConfig::augment)},
      {"augment.noise_fraction",
       number_field(&AugmentConfig::noise_fraction, &RunConfig::augment)},
      {"augment.rng_seed", number_field(&AugmentConfig::rng_seed, &RunConfig::augment)},
  };
  return table;
}

}  // namespace

SplitConfig parse_split(std::string_view text) {
  text = trim(text);
  SplitConfig s;
  const auto colon = text.find(':');
  const auto kind = text.substr(0, colon);
  const std::string_view rest = colon == std::string_view::npos ? "" : text.substr(colon + 1);
  if (kind == "kfold") {
    s.kind = SplitKind::KFold;
    if (!rest.empty()) {
      const auto c2 = rest.find(':');
      s.k = parse_number<std::size_t>("split", rest.substr(0, c2));
      if (c2 != std::string_view::npos) {
        s.fold = parse_number<std::size_t>("split", rest.substr(c2 + 1));
      }
    }
  } else if (kind == "holdout") {
    s.kind = SplitKind::Holdout;
    if (!rest.empty()) s.ratio = parse_number<double>("split", rest);
  } else {
    fail("split must be kfold[:k[:fold]] or holdout[:ratio], got '" + std::string(text) + "'");
  }
  return s;
}

std::string split_to_string(const SplitConfig& split) {
  if (split.kind == SplitKind::Holdout) return "holdout:" + fmt(split.ratio);
  std::string out = "kfold:" + std::to_string(split.k);
  if (split.fold) out += ":" + std::to_string(*split.fold);
  return out;
}

KeyValues parse_key_values(std::string_view text) {
  KeyValues kv;
  std::string section;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail("line " + std::to_string(line_no) + ": unterminated section");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      fail("line " + std::to_string(line_no) + ": expected key = value");
    }
    std::string key(trim(line.substr(0, eq)));
    if (key.empty()) fail("line " + std::to_string(line_no) + ": empty key");
    if (!section.empty()) key = section + "." + key;
    if (kv.contains(key)) fail("line " + std::to_string(line_no) + ": duplicate key " + key);
    kv.emplace(std::move(key), std::string(trim(line.substr(eq + 1))));
  }
  return kv;
}

RunConfig run_config_from(const KeyValues& kv, RunConfig base) {
  const auto& table = setters();
  for (const auto& [key, value] : kv) {
    const auto it = table.find(key);
    if (it == table.end()) fail("unknown config key '" + key + "'");
    it->second(base, key, value);
  }
  return base;
}

RunConfig parse_run_config(std::string_view text) {
  return run_config_from(parse_key_values(text));
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

std::string to_text(const RunConfig& c) {
  std::ostringstream out;
  out << "dataset_root = " << c.dataset_root.string() << '\n'
      << "output_dir = " << c.output_dir.string() << '\n'
      << "channel = " << c.channel << '\n'
      << "seed = " << c.seed << '\n'
      << "max_recordings = " << c.max_recordings << '\n'
      << "workers = " << c.workers << '\n'
      << "split = " << split_to_string(c.split) << "\n\n"
      << "[model]\n"
      << "branch_kernel_sizes = " << fmt(c.model.branch_kernel_sizes) << '\n'
      << "branch_channels = " << c.model.branch_channels << '\n'
      << "attention_channels = " << c.model.attention_channels << '\n'
      << "attention_blocks = " << c.model.attention_blocks << '\n'
      << "channel_attention_reduction = " << c.model.channel_attention_reduction << '\n'
      << "spatial_kernel = " << c.model.spatial_kernel << '\n'
      << "pool_sizes = " << fmt(c.model.pool_sizes) << '\n'
      << "num_classes = " << c.model.num_classes << '\n'
      << "input_length = " << c.model.input_length << '\n'
      << "bn_eps = " << fmt(c.model.bn_eps) << '\n'
      << "bn_momentum = " << fmt(c.model.bn_momentum) << "\n\n"
      << "[train]\n"
      << "learning_rate = " << fmt(c.train.learning_rate) << '\n'
      << "batch_size = " << c.train.batch_size << '\n'
      << "adam_beta1 = " << fmt(c.train.adam_beta1) << '\n'
      << "adam_beta2 = " << fmt(c.train.adam_beta2) << '\n'
      << "adam_eps = " << fmt(c.train.adam_eps) << '\n'
      << "max_training_passes = " << c.train.max_training_passes << '\n'
      << "checkpoint_every = " << c.train.checkpoint_every << '\n'
      << "augment = " << (c.train.augment ? "true" : "false") << "\n\n"
      << "[augment]\n"
      << "flip_probability = " << fmt(c.augment.flip_probability) << '\n'
      << "noise_fraction = " << fmt(c.augment.noise_fraction) << '\n'
      << "rng_seed = " << c.augment.rng_seed << '\n';
  return out.str();
}

void apply_environment(RunConfig& cfg) {
  if (const char* root = std::getenv(std::string(kDatasetRootEnv).c_str());
      root != nullptr && *root != '\0') {
    cfg.dataset_root = root;
  }
}

void validate(const RunConfig& cfg) {
  if (cfg.channel.empty()) fail("channel must not be empty");
  if (cfg.output_dir.empty()) fail("output_dir must not be empty");
  if (cfg.split.kind == SplitKind::KFold) {
    if (cfg.split.k < 2) fail("kfold needs k >= 2");
    if (cfg.split.fold && *cfg.split.fold >= cfg.split.k) fail("fold index must be < k");
  } else if (!(cfg.split.ratio > 0.0 && cfg.split.ratio < 1.0)) {
    fail("holdout ratio must lie in (0, 1)");
  }
  if (cfg.model.input_length != edf::kCacheEpochSamples) {
    fail("model.input_length must be " + std::to_string(edf::kCacheEpochSamples) +
         " (30 s at 100 Hz) to consume the epoch cache");
  }
  if (cfg.model.num_classes != static_cast<std::size_t>(kNumStages)) {
    fail("model.num_classes must be 5");
  }
  cfg.model.validate();
  cfg.train.validate();
  cfg.augment.validate();
}

std::string manifest_to_text(const ModelManifest& m) {
  std::ostringstream out;
  out << "channel = " << m.channel << '\n'
      << "cache_version = " << m.cache_version << '\n'
      << "[model]\n"
      << "branch_kernel_sizes = " << fmt(m.model.branch_kernel_sizes) << '\n'
      << "branch_channels = " << m.model.branch_channels << '\n'
      << "attention_channels = " << m.model.attention_channels << '\n'
      << "attention_blocks = " << m.model.attention_blocks << '\n'
      << "channel_attention_reduction = " << m.model.channel_attention_reduction << '\n'
      << "spatial_kernel = " << m.model.spatial_kernel << '\n'
      << "pool_sizes = " << fmt(m.model.pool_sizes) << '\n'
      << "num_classes = " << m.model.num_classes << '\n'
      << "input_length = " << m.model.input_length << '\n'
      << "bn_eps = " << fmt(m.model.bn_eps) << '\n'
      << "bn_momentum = " << fmt(m.model.bn_momentum) << '\n';
  return out.str();
}

ModelManifest parse_manifest(std::string_view text) {
  auto kv = parse_key_values(text);
  ModelManifest m;
  if (const auto it = kv.find("channel"); it != kv.end()) {
    m.channel = it->second;
    kv.erase(it);
  } else {
    fail("manifest lacks 'channel'");
  }
  if (const auto it = kv.find("cache_version"); it != kv.end()) {
    m.cache_version = parse_number<std::uint32_t>("cache_version", it->second);
    kv.erase(it);
  } else {
    fail("manifest lacks 'cache_version'");
  }
  for (const auto& [key, value] : kv) {
    if (!key.starts_with("model.")) fail("unexpected manifest key '" + key + "'");
  }
  m.model = run_config_from(kv).model;
  m.model.validate();
  return m;
}

std::filesystem::path manifest_path_for(const std::filesystem::path& checkpoint) {
  auto p = checkpoint;
  p += ".model.cfg";
  return p;
}

void save_manifest(const std::filesystem::path& checkpoint, const ModelManifest& m) {
  const auto path = manifest_path_for(checkpoint);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  out << manifest_to_text(m);
}

ModelManifest load_manifest(const std::filesystem::path& checkpoint) {
  const auto path = manifest_path_for(checkpoint);
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(Errc::ConfigMismatch, "checkpoint " + checkpoint.string() +
                                          " has no model manifest at " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str());
}

}  // namespace msdan::config
