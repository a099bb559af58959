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

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>

#include "msdan/config.hpp"
#include "support/expect.hpp"
#include "support/synthetic.hpp"

using namespace msdan;
using namespace msdan::config;
using msdan::testing::code_of;

TEST(Split, ParsesAndPrints) {
  const auto a = parse_split("kfold:5");
  EXPECT_EQ(a.kind, SplitKind::KFold);
  EXPECT_EQ(a.k, 5u);
  EXPECT_FALSE(a.fold.has_value());
  const auto b = parse_split("kfold:10:3");
  EXPECT_EQ(b.k, 10u);
  EXPECT_EQ(b.fold, 3u);
  const auto c = parse_split("holdout:0.7");
  EXPECT_EQ(c.kind, SplitKind::Holdout);
  EXPECT_DOUBLE_EQ(c.ratio, 0.7);
  EXPECT_DOUBLE_EQ(parse_split("holdout").ratio, 0.8);
  for (const auto& s : {a, b, c}) EXPECT_EQ(parse_split(split_to_string(s)), s);
  EXPECT_EQ(code_of([] { parse_split("loo"); }), Errc::ConfigError);
  EXPECT_EQ(code_of([] { parse_split("kfold:x"); }), Errc::ConfigError);
}

TEST(KeyValues, SectionsCommentsAndErrors) {
  const auto kv = parse_key_values(
      "# run\nseed = 4\n\n[train]\nlearning_rate = 0.001  # faster\n[model]\nbranch_channels=8\n");
  EXPECT_EQ(kv.at("seed"), "4");
  EXPECT_EQ(kv.at("train.learning_rate"), "0.001");
  EXPECT_EQ(kv.at("model.branch_channels"), "8");
  EXPECT_EQ(code_of([] { parse_key_values("seed = 1\nseed = 2\n"); }), Errc::ConfigError);
  EXPECT_EQ(code_of([] { parse_key_values("no equals sign\n"); }), Errc::ConfigError);
}

TEST(RunConfig, ParsesKnownKeysAndRejectsOthers) {
  const auto c = parse_run_config(
      "seed = 9\nsplit = holdout:0.8\nchannel = EEG Pz-Oz\n"
      "[model]\nbranch_channels = 8\nattention_channels = 24\npool_sizes = 8,4,4\n"
      "[train]\nmax_training_passes = 3\naugment = false\n[augment]\nnoise_fraction = 0.02\n");
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.split.kind, SplitKind::Holdout);
  EXPECT_EQ(c.channel, "EEG Pz-Oz");
  EXPECT_EQ(c.model.branch_channels, 8u);
  EXPECT_EQ(c.model.pool_sizes, (std::vector<std::size_t>{8, 4, 4}));
  EXPECT_EQ(c.train.max_training_passes, 3u);
  EXPECT_FALSE(c.train.augment);
  EXPECT_DOUBLE_EQ(c.augment.noise_fraction, 0.02);
  EXPECT_NO_THROW(validate(c));
  EXPECT_EQ(code_of([] { parse_run_config("colour = red\n"); }), Errc::ConfigError);
  EXPECT_EQ(code_of([] { parse_run_config("[train]\nbatch_size = -3\n"); }), Errc::ConfigError);
  EXPECT_EQ(code_of([] { parse_run_config("[train]\nlearning_rate = fast\n"); }),
            Errc::ConfigError);
}

TEST(RunConfig, TextFormRoundTrips) {
  RunConfig c;
  c.seed = 123456789012345ull;
  c.dataset_root = "/data/sleep";
  c.split = parse_split("kfold:5:1");
  c.model.bn_eps = 1.0 / 3.0;
  c.train.learning_rate = 0.1 + 0.2;
  c.augment.flip_probability = 0.25;
  c.max_recordings = 4;
  const auto back = parse_run_config(to_text(c));
  EXPECT_EQ(to_text(back), to_text(c));
  EXPECT_EQ(back.model, c.model);
  EXPECT_EQ(back.split, c.split);
  EXPECT_EQ(back.train.learning_rate, c.train.learning_rate);
  EXPECT_EQ(back.dataset_root, c.dataset_root);
}

TEST(RunConfig, ValidationRules) {
  RunConfig c;
  EXPECT_NO_THROW(validate(c));
  c.model.input_length = 64;
  EXPECT_EQ(code_of([&] { validate(c); }), Errc::ConfigError);
  c = RunConfig{};
  c.split = parse_split("kfold:5:7");
  EXPECT_EQ(code_of([&] { validate(c); }), Errc::ConfigError);
  c = RunConfig{};
  c.augment.flip_probability = 2.0;
  EXPECT_EQ(code_of([&] { validate(c); }), Errc::ConfigError);
}

TEST(RunConfig, EnvironmentOverridesDatasetRoot) {
  RunConfig c;
  ::setenv(std::string(kDatasetRootEnv).c_str(), "/mnt/edf", 1);
  apply_environment(c);
  EXPECT_EQ(c.dataset_root, "/mnt/edf");
  ::unsetenv(std::string(kDatasetRootEnv).c_str());
  RunConfig d;
  apply_environment(d);
  EXPECT_EQ(d.dataset_root, "data");
}

TEST(RunConfig, LoadFromFile) {
  msdan::testing::TempDir dir("cfg");
  {
    std::ofstream out(dir.path() / "run.cfg");
    out << "output_dir = results\n[train]\nbatch_size = 16\n";
  }
  const auto c = load_run_config(dir.path() / "run.cfg");
  EXPECT_EQ(c.output_dir, "results");
  EXPECT_EQ(c.train.batch_size, 16u);
  EXPECT_EQ(code_of([&] { load_run_config(dir.path() / "missing.cfg"); }), Errc::ConfigError);
}

TEST(Manifest, RoundTripAndMissingFile) {
  ModelManifest m;
  m.channel = "EEG Fpz-Cz";
  m.cache_version = 1;
  m.model.branch_channels = 8;
  m.model.attention_channels = 24;
  EXPECT_EQ(parse_manifest(manifest_to_text(m)), m);
  msdan::testing::TempDir dir("manifest");
  const auto ckpt = dir.path() / "best.ckpt";
  EXPECT_EQ(manifest_path_for(ckpt).filename(), "best.ckpt.model.cfg");
  EXPECT_EQ(code_of([&] { load_manifest(ckpt); }), Errc::ConfigMismatch);
  save_manifest(ckpt, m);
  EXPECT_EQ(load_manifest(ckpt), m);
}
