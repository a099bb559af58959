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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "msdan/edf.hpp"
#include "msdan/model.hpp"
#include "msdan/stage.hpp"

namespace msdan::eval {

using Probabilities = std::array<double, kNumStages>;

// Counts indexed [true stage code][predicted stage code].
class ConfusionMatrix {
 public:
  using Counts = std::array<std::array<std::uint64_t, kNumStages>, kNumStages>;

  ConfusionMatrix() = default;
  explicit ConfusionMatrix(const Counts& counts) : counts_(counts) {}

  // Rows in display order W,R,N1,N2,N3; columns N3,N2,N1,R,W, i.e. the layout
  // of a printed sleep-staging confusion table.
  static ConfusionMatrix from_display(const Counts& rows);
  Counts to_display() const;

  void add(Stage truth, Stage predicted, std::uint64_t n = 1);
  std::uint64_t count(Stage truth, Stage predicted) const;
  std::uint64_t total() const;
  std::uint64_t trace() const;
  std::uint64_t row_total(Stage truth) const;
  std::uint64_t column_total(Stage predicted) const;
  const Counts& counts() const { return counts_; }

  ConfusionMatrix& operator+=(const ConfusionMatrix& other);
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  Counts counts_{};
};

ConfusionMatrix accumulate(ConfusionMatrix cm, Stage truth, Stage predicted);
ConfusionMatrix confusion_from(std::span<const Stage> truth, std::span<const Stage> predicted);

// Percentages. Absent when the denominator is zero.
struct StageMetrics {
  std::optional<double> accuracy;
  std::optional<double> recall;
  std::optional<double> precision;
  std::optional<double> f1;
};

struct SummaryMetrics {
  double overall_accuracy = 0.0;  // percent
  double mean_accuracy = 0.0;     // percent, unweighted over stages
  double kappa = 0.0;
  // Unweighted means over the stages where the metric is defined.
  double macro_f1 = 0.0;     // fraction
  double mean_recall = 0.0;  // percent
  // False when some stage's recall or F1 was undefined and left out.
  bool all_stages_defined = true;
};

// One-vs-rest. Throws Errc::UndefinedMetric on an empty matrix.
StageMetrics stage_metrics(const ConfusionMatrix& cm, Stage stage);
// Throws Errc::UndefinedMetric on an empty matrix or chance agreement 1.
SummaryMetrics summary_metrics(const ConfusionMatrix& cm);

// ---------------------------------------------------------------------------
// Splits

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

// Epoch-granular k-fold assignment: fold_of[i] in [0, k).
struct KFoldSplit {
  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::vector<std::size_t> fold_of;

  Split fold(std::size_t index) const;
};

// Throws Errc::TooFewSamples when n < k.
KFoldSplit kfold_split(std::size_t n, std::size_t k, std::uint64_t seed);

struct HoldoutSplit {
  std::vector<std::string> train_subjects;
  std::vector<std::string> eval_subjects;

  // Epoch indices by subject membership; epochs of unknown subjects are
  // dropped.
  Split apply(std::span<const edf::LabeledEpoch> epochs) const;
};

// Subject-granular: floor(ratio * n) training subjects, at least one on each
// side. Duplicates in `subjects` are ignored. Throws Errc::TooFewSubjects.
HoldoutSplit holdout_split(std::vector<std::string> subjects, double ratio,
                           std::uint64_t seed);

// ---------------------------------------------------------------------------
// Curves

struct CurvePoint {
  double x = 0.0;
  double y = 0.0;
  double threshold = 0.0;
};

struct ClassCurves {
  Stage stage = Stage::W;
  // ROC: x = false-positive rate, y = true-positive rate, from (0,0).
  std::vector<CurvePoint> roc;
  // PR: x = recall, y = precision, from (0,1).
  std::vector<CurvePoint> pr;
  double roc_auc = 0.0;
  double pr_auc = 0.0;
};

// One-vs-rest threshold sweep over the distinct scores, trapezoidal areas.
// Throws Errc::SingleClassPresent when the class has no positives or no
// negatives.
ClassCurves class_curves(std::span<const double> scores, std::span<const bool> positive,
                         Stage stage);
std::array<std::optional<ClassCurves>, kNumStages> roc_pr_curves(
    std::span<const Probabilities> probabilities, std::span<const Stage> labels);

// ---------------------------------------------------------------------------
// Model evaluation

// Argmax with ties resolved to the lowest class code.
Stage argmax_stage(const Probabilities& p);

// Eval-mode softmax outputs, batched, no graph recorded.
std::vector<Probabilities> predict_probabilities(model::Msdan& net,
                                                 std::span<const edf::LabeledEpoch> epochs,
                                                 std::span<const std::size_t> indices,
                                                 std::size_t batch_size = 32);

struct EpochPrediction {
  std::string subject_id;
  int epoch_index = 0;
  Stage truth = Stage::W;
  Stage predicted = Stage::W;
  Probabilities probabilities{};
};

struct EvalResult {
  ConfusionMatrix confusion;
  std::array<StageMetrics, kNumStages> stages;
  std::optional<SummaryMetrics> summary;  // absent when undefined
  std::array<std::optional<ClassCurves>, kNumStages> curves;
  // Ordered by (subject_id, epoch_index) for hypnogram rendering.
  std::vector<EpochPrediction> predictions;
};

// Builds the full report from a prediction stream.
EvalResult summarize(std::vector<EpochPrediction> predictions);

// Throws Errc::EmptySplit.
EvalResult evaluate(model::Msdan& net, std::span<const edf::LabeledEpoch> epochs,
                    std::span<const std::size_t> indices);

}  // namespace msdan::eval
