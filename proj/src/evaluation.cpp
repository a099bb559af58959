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

#include "msdan/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <random>
#include <set>
#include <tuple>

#include "msdan/error.hpp"
#include "msdan/ops.hpp"

namespace msdan::eval {

namespace {

std::size_t code(Stage s) { return static_cast<std::size_t>(stage_code(s)); }

constexpr std::array<Stage, kNumStages> kDisplayColumnOrder = {
    Stage::N3, Stage::N2, Stage::N1, Stage::R, Stage::W};

double trapezoid(const std::vector<CurvePoint>& pts) {
  double area = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    area += (pts[i].x - pts[i - 1].x) * (pts[i].y + pts[i - 1].y) / 2.0;
  }
  return area;
}

}  // namespace

ConfusionMatrix ConfusionMatrix::from_display(const Counts& rows) {
  ConfusionMatrix cm;
  for (std::size_t r = 0; r < kNumStages; ++r) {
    for (std::size_t c = 0; c < kNumStages; ++c) {
      cm.counts_[code(kDisplayRowOrder[r])][code(kDisplayColumnOrder[c])] = rows[r][c];
    }
  }
  return cm;
}

ConfusionMatrix::Counts ConfusionMatrix::to_display() const {
  Counts rows{};
  for (std::size_t r = 0; r < kNumStages; ++r) {
    for (std::size_t c = 0; c < kNumStages; ++c) {
      rows[r][c] = counts_[code(kDisplayRowOrder[r])][code(kDisplayColumnOrder[c])];
    }
  }
  return rows;
}

void ConfusionMatrix::add(Stage truth, Stage predicted, std::uint64_t n) {
  counts_[code(truth)][code(predicted)] += n;
}

std::uint64_t ConfusionMatrix::count(Stage truth, Stage predicted) const {
  return counts_[code(truth)][code(predicted)];
}

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t n = 0;
  for (const auto& row : counts_) n += std::accumulate(row.begin(), row.end(), std::uint64_t{0});
  return n;
}

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t n = 0;
  for (std::size_t i = 0; i < kNumStages; ++i) n += counts_[i][i];
  return n;
}

std::uint64_t ConfusionMatrix::row_total(Stage truth) const {
  const auto& row = counts_[code(truth)];
  return std::accumulate(row.begin(), row.end(), std::uint64_t{0});
}

std::uint64_t ConfusionMatrix::column_total(Stage predicted) const {
  std::uint64_t n = 0;
  for (const auto& row : counts_) n += row[code(predicted)];
  return n;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  for (std::size_t i = 0; i < kNumStages; ++i) {
    for (std::size_t j = 0; j < kNumStages; ++j) counts_[i][j] += other.counts_[i][j];
  }
  return *this;
}

ConfusionMatrix accumulate(ConfusionMatrix cm, Stage truth, Stage predicted) {
  cm.add(truth, predicted);
  return cm;
}

ConfusionMatrix confusion_from(std::span<const Stage> truth, std::span<const Stage> predicted) {
  if (truth.size() != predicted.size()) {
    throw Error(Errc::ShapeMismatch, "truth and prediction streams differ in length");
  }
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < truth.size(); ++i) cm.add(truth[i], predicted[i]);
  return cm;
}

StageMetrics stage_metrics(const ConfusionMatrix& cm, Stage stage) {
  const auto n = static_cast<double>(cm.total());
  if (n == 0.0) throw Error(Errc::UndefinedMetric, "empty confusion matrix");
  const auto tp = static_cast<double>(cm.count(stage, stage));
  const double fn = static_cast<double>(cm.row_total(stage)) - tp;
  const double fp = static_cast<double>(cm.column_total(stage)) - tp;
  const double tn = n - tp - fn - fp;
  StageMetrics m;
  m.accuracy = 100.0 * (tp + tn) / n;
  if (tp + fn > 0) m.recall = 100.0 * tp / (tp + fn);
  if (tp + fp > 0) m.precision = 100.0 * tp / (tp + fp);
  if (2 * tp + fp + fn > 0) m.f1 = 100.0 * 2 * tp / (2 * tp + fp + fn);
  return m;
}

SummaryMetrics summary_metrics(const ConfusionMatrix& cm) {
  const auto n = static_cast<double>(cm.total());
  if (n == 0.0) throw Error(Errc::UndefinedMetric, "empty confusion matrix");
  SummaryMetrics s;
  const double p0 = static_cast<double>(cm.trace()) / n;
  double pe = 0.0;
  for (Stage st : kAllStages) {
    pe += static_cast<double>(cm.row_total(st)) * static_cast<double>(cm.column_total(st));
  }
  pe /= n * n;
  if (pe >= 1.0) throw Error(Errc::UndefinedMetric, "chance agreement is 1; kappa undefined");
  s.overall_accuracy = 100.0 * p0;
  s.kappa = (p0 - pe) / (1.0 - pe);

  double acc = 0.0, f1 = 0.0, rec = 0.0;
  int f1_n = 0, rec_n = 0;
  for (Stage st : kAllStages) {
    const auto m = stage_metrics(cm, st);
    acc += *m.accuracy;
    if (m.f1) {
      f1 += *m.f1;
      ++f1_n;
    }
    if (m.recall) {
      rec += *m.recall;
      ++rec_n;
    }
  }
  s.mean_accuracy = acc / kNumStages;
  s.macro_f1 = f1_n ? f1 / f1_n / 100.0 : 0.0;
  s.mean_recall = rec_n ? rec / rec_n : 0.0;
  s.all_stages_defined = f1_n == kNumStages && rec_n == kNumStages;
  return s;
}

Split KFoldSplit::fold(std::size_t index) const {
  if (index >= k) throw Error(Errc::ConfigError, "fold index out of range");
  Split split;
  for (std::size_t i = 0; i < fold_of.size(); ++i) {
    (fold_of[i] == index ? split.validation : split.train).push_back(i);
  }
  return split;
}

KFoldSplit kfold_split(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw Error(Errc::ConfigError, "k-fold needs k >= 2");
  if (n < k) {
    throw Error(Errc::TooFewSamples, std::to_string(n) + " epochs cannot fill " +
                                         std::to_string(k) + " folds");
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  KFoldSplit split{k, seed, std::vector<std::size_t>(n)};
  for (std::size_t i = 0; i < n; ++i) split.fold_of[perm[i]] = i % k;
  return split;
}

Split HoldoutSplit::apply(std::span<const edf::LabeledEpoch> epochs) const {
  const std::set<std::string> train(train_subjects.begin(), train_subjects.end());
  const std::set<std::string> held(eval_subjects.begin(), eval_subjects.end());
  Split split;
  for (std::size_t i = 0; i < epochs.size(); ++i) {
    if (train.contains(epochs[i].subject_id)) {
      split.train.push_back(i);
    } else if (held.contains(epochs[i].subject_id)) {
      split.validation.push_back(i);
    }
  }
  return split;
}

HoldoutSplit holdout_split(std::vector<std::string> subjects, double ratio,
                           std::uint64_t seed) {
  std::sort(subjects.begin(), subjects.end());
  subjects.erase(std::unique(subjects.begin(), subjects.end()), subjects.end());
  if (subjects.size() < 2) {
    throw Error(Errc::TooFewSubjects, "hold-out needs at least 2 subjects");
  }
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw Error(Errc::ConfigError, "hold-out ratio must lie in (0, 1)");
  }
  std::mt19937_64 rng(seed);
  std::shuffle(subjects.begin(), subjects.end(), rng);
  const std::size_t n = subjects.size();
  auto n_train = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n) + 1e-9));
  n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
  HoldoutSplit out;
  out.train_subjects.assign(subjects.begin(), subjects.begin() + static_cast<long>(n_train));
  out.eval_subjects.assign(subjects.begin() + static_cast<long>(n_train), subjects.end());
  std::sort(out.train_subjects.begin(), out.train_subjects.end());
  std::sort(out.eval_subjects.begin(), out.eval_subjects.end());
  return out;
}

ClassCurves class_curves(std::span<const double> scores, std::span<const bool> positive,
                         Stage stage) {
  if (scores.size() != positive.size()) {
    throw Error(Errc::ShapeMismatch, "scores and labels differ in length");
  }
  const auto pos = static_cast<double>(std::count(positive.begin(), positive.end(), true));
  const double neg = static_cast<double>(positive.size()) - pos;
  if (pos == 0.0 || neg == 0.0) {
    throw Error(Errc::SingleClassPresent,
                std::string(stage_name(stage)) + " has no " + (pos == 0.0 ? "positives" : "negatives"));
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  ClassCurves out;
  out.stage = stage;
  out.roc.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  out.pr.push_back({0.0, 1.0, std::numeric_limits<double>::infinity()});
  double tp = 0.0, fp = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    const double threshold = scores[order[i]];
    while (i < order.size() && scores[order[i]] == threshold) {
      (positive[order[i]] ? tp : fp) += 1.0;
      ++i;
    }
    out.roc.push_back({fp / neg, tp / pos, threshold});
    out.pr.push_back({tp / pos, tp / (tp + fp), threshold});
  }
  out.roc_auc = trapezoid(out.roc);
  out.pr_auc = trapezoid(out.pr);
  return out;
}

std::array<std::optional<ClassCurves>, kNumStages> roc_pr_curves(
    std::span<const Probabilities> probabilities, std::span<const Stage> labels) {
  if (probabilities.size() != labels.size()) {
    throw Error(Errc::ShapeMismatch, "probabilities and labels differ in length");
  }
  std::array<std::optional<ClassCurves>, kNumStages> out;
  std::vector<double> scores(labels.size());
  for (Stage st : kAllStages) {
    const auto c = code(st);
    auto positive = std::make_unique<bool[]>(labels.size());
    std::size_t pos = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      scores[i] = probabilities[i][c];
      positive[i] = labels[i] == st;
      pos += positive[i];
    }
    if (pos == 0 || pos == labels.size()) continue;
    out[c] = class_curves(scores, std::span<const bool>(positive.get(), labels.size()), st);
  }
  return out;
}

Stage argmax_stage(const Probabilities& p) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < p.size(); ++c) {
    if (p[c] > p[best]) best = c;
  }
  return static_cast<Stage>(best);
}

std::vector<Probabilities> predict_probabilities(model::Msdan& net,
                                                 std::span<const edf::LabeledEpoch> epochs,
                                                 std::span<const std::size_t> indices,
                                                 std::size_t batch_size) {
  ag::NoGradGuard no_grad;
  const std::size_t L = net.config().input_length;
  std::vector<Probabilities> out;
  out.reserve(indices.size());
  for (std::size_t start = 0; start < indices.size(); start += batch_size) {
    const std::size_t B = std::min(batch_size, indices.size() - start);
    std::vector<double> x(B * L);
    for (std::size_t b = 0; b < B; ++b) {
      const auto& e = epochs[indices[start + b]];
      if (e.samples.size() != L) {
        throw Error(Errc::ShapeMismatch, "epoch has " + std::to_string(e.samples.size()) +
                                             " samples, model expects " + std::to_string(L));
      }
      std::copy(e.samples.begin(), e.samples.end(), x.begin() + static_cast<long>(b * L));
    }
    const auto probs =
        ag::softmax(net.forward(ag::Tensor({B, 1, L}, std::move(x)), model::Mode::Eval));
    const auto pv = probs.values();
    for (std::size_t b = 0; b < B; ++b) {
      Probabilities p{};
      std::copy_n(pv.data() + b * kNumStages, kNumStages, p.begin());
      out.push_back(p);
    }
  }
  return out;
}

EvalResult summarize(std::vector<EpochPrediction> predictions) {
  EvalResult r;
  std::stable_sort(predictions.begin(), predictions.end(),
                   [](const EpochPrediction& a, const EpochPrediction& b) {
                     return std::tie(a.subject_id, a.epoch_index) <
                            std::tie(b.subject_id, b.epoch_index);
                   });
  std::vector<Probabilities> probs;
  std::vector<Stage> labels;
  for (const auto& p : predictions) {
    r.confusion.add(p.truth, p.predicted);
    probs.push_back(p.probabilities);
    labels.push_back(p.truth);
  }
  if (r.confusion.total() > 0) {
    for (Stage st : kAllStages) r.stages[code(st)] = stage_metrics(r.confusion, st);
    try {
      r.summary = summary_metrics(r.confusion);
    } catch (const Error& e) {
      if (e.code() != Errc::UndefinedMetric) throw;
    }
  }
  r.curves = roc_pr_curves(probs, labels);
  r.predictions = std::move(predictions);
  return r;
}

EvalResult evaluate(model::Msdan& net, std::span<const edf::LabeledEpoch> epochs,
                    std::span<const std::size_t> indices) {
  if (indices.empty()) throw Error(Errc::EmptySplit, "nothing to evaluate");
  const auto probs = predict_probabilities(net, epochs, indices);
  std::vector<EpochPrediction> preds;
  preds.reserve(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto& e = epochs[indices[i]];
    preds.push_back({e.subject_id, e.epoch_index, e.label, argmax_stage(probs[i]), probs[i]});
  }
  return summarize(std::move(preds));
}

}  // namespace msdan::eval
