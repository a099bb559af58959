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

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "msdan/edf.hpp"
#include "msdan/evaluation.hpp"
#include "msdan/model.hpp"
#include "msdan/params.hpp"
#include "msdan/preprocess.hpp"
#include "msdan/stage.hpp"

namespace msdan::train {

using ag::Tensor;

// Indexed by stage code.
struct ClassWeights {
  std::array<double, kNumStages> weight{1.0, 1.0, 1.0, 1.0, 1.0};
  double operator[](Stage s) const { return weight[stage_code(s)]; }
};

// min(5, max(1, ln(1/p))) per class, natural log. Proportions are indexed by
// stage code. Throws Errc::ZeroProportion for p <= 0.
ClassWeights class_weights(const std::array<double, kNumStages>& proportions);

// Label frequencies over the selected epochs, indexed by stage code.
std::array<double, kNumStages> class_proportions(std::span<const edf::LabeledEpoch> epochs,
                                                 std::span<const std::size_t> indices);

// Weights for a training split. A class with no training epochs has an
// unbounded ln(1/p) and takes the upper clamp, 5.
ClassWeights split_class_weights(std::span<const edf::LabeledEpoch> epochs,
                                 std::span<const std::size_t> indices);

// Sum over the batch of w[y] (logsumexp(x) - x[y]) divided by the sum of w[y].
// logits [B,5]. Throws Errc::ShapeMismatch.
Tensor weighted_ce_loss(const Tensor& logits, std::span<const Stage> labels,
                        const ClassWeights& weights);

struct TrainConfig {
  double learning_rate = 0.0005;
  std::size_t batch_size = 8;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t max_training_passes = 30;
  std::uint64_t seed = 0;
  // Write a checkpoint every this many passes; 0 disables.
  std::size_t checkpoint_every = 0;
  bool augment = true;

  // Throws Errc::ConfigError.
  void validate() const;
};

struct AdamState {
  // One slot per ParamStore entry; empty for buffers.
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::uint64_t step = 0;
};

AdamState make_adam_state(const ag::ParamStore& params);

// Bias-corrected Adam update of every trainable entry from its accumulated
// gradient. Throws Errc::MissingGradient if a trainable entry has none.
void adam_step(ag::ParamStore& params, AdamState& state, const TrainConfig& cfg);

struct PassRecord {
  std::size_t pass = 0;  // 1-based
  std::uint64_t step = 0;
  double train_loss = 0.0;
  // Empty when there is no validation split or the metric is undefined.
  std::optional<double> val_overall_accuracy;
  std::optional<double> val_kappa;
  std::optional<double> val_macro_f1;
};

struct TrainResult {
  ag::ParamStore best_params;
  std::size_t best_pass = 0;
  ClassWeights weights;
  std::vector<PassRecord> log;
};

struct TrainHooks {
  std::function<void(const PassRecord&)> on_pass;
  // Called with the live parameters every checkpoint_every passes.
  std::function<void(std::size_t pass, const ag::ParamStore&)> on_checkpoint;
};

// Shuffled mini-batches of the training indices each pass, augmented when
// enabled; validation metrics after every pass; the parameters with the best
// validation kappa are kept (the last pass when there is no validation data).
// Throws Errc::EmptySplit, Errc::SplitOverlap.
TrainResult train(std::span<const edf::LabeledEpoch> epochs, const eval::Split& split,
                  const TrainConfig& cfg, const model::ModelConfig& model_cfg,
                  const preprocess::AugmentConfig& augment_cfg, const TrainHooks& hooks = {});

// Header plus one row per pass; empty cells for absent metrics.
void write_training_log(const std::filesystem::path& path, std::span<const PassRecord> log);

}  // namespace msdan::train
