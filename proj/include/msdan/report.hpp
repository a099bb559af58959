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

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "msdan/evaluation.hpp"
#include "msdan/stage.hpp"

namespace msdan::report {

inline constexpr int kMetricsSchemaVersion = 1;

struct FoldReport {
  std::string name;
  eval::ConfusionMatrix confusion;
  std::size_t best_pass = 0;
};

// Deterministic JSON (sorted keys, no timestamps) with the pooled confusion
// matrix in display order, per-stage and summary metrics, curve areas and
// the per-fold confusion matrices.
std::string metrics_json(const eval::EvalResult& pooled, std::string_view protocol,
                         std::span<const FoldReport> folds = {});

// Per-epoch predictions: subject_id, epoch_index, truth, predicted and the
// five class probabilities.
std::string predictions_csv(std::span<const eval::EpochPrediction> predictions);

// stage, curve (roc|pr), x, y, threshold.
std::string curves_csv(const std::array<std::optional<eval::ClassCurves>, kNumStages>& curves);

// Heatmap in display order, cells shaded by row-normalized share.
std::string confusion_svg(const eval::ConfusionMatrix& cm, std::string_view title);

// Step plot, W at the top and N3 at the bottom. The reference track (manual
// scoring) is drawn in blue under the predicted track in orange.
std::string hypnogram_svg(std::span<const Stage> predicted,
                          std::optional<std::span<const Stage>> reference,
                          std::string_view title);

// Stage table in the layout of the printed class-count table.
std::string class_count_table(const std::array<std::size_t, kNumStages>& counts);

void write_text(const std::filesystem::path& path, std::string_view text);

}  // namespace msdan::report
