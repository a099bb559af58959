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

#include "msdan/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>

#include <spdlog/spdlog.h>

#include "msdan/error.hpp"
#include "msdan/ops.hpp"

namespace msdan::train {

namespace {

constexpr double kMinWeight = 1.0;
constexpr double kMaxWeight = 5.0;

std::string format_optional(const std::optional<double>& v) {
  if (!v) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", *v);
  return buf;
}

}  // namespace

ClassWeights class_weights(const std::array<double, kNumStages>& proportions) {
  ClassWeights w;
  for (std::size_t c = 0; c < proportions.size(); ++c) {
    const double p = proportions[c];
    if (!(p > 0.0)) {
      throw Error(Errc::ZeroProportion,
                  std::string(stage_name(static_cast<Stage>(c))) + " has proportion " +
                      std::to_string(p));
    }
    w.weight[c] = std::min(kMaxWeight, std::max(kMinWeight, std::log(1.0 / p)));
  }
  return w;
}

std::array<double, kNumStages> class_proportions(std::span<const edf::LabeledEpoch> epochs,
                                                 std::span<const std::size_t> indices) {
  std::array<double, kNumStages> counts{};
  for (std::size_t i : indices) counts[stage_code(epochs[i].label)] += 1.0;
  if (!indices.empty()) {
    for (double& c : counts) c /= static_cast<double>(indices.size());
  }
  return counts;
}

ClassWeights split_class_weights(std::span<const edf::LabeledEpoch> epochs,
                                 std::span<const std::size_t> indices) {
  auto p = class_proportions(epochs, indices);
  ClassWeights w;
  for (std::size_t c = 0; c < p.size(); ++c) {
    if (p[c] > 0.0) {
      w.weight[c] = std::min(kMaxWeight, std::max(kMinWeight, std::log(1.0 / p[c])));
    } else {
      w.weight[c] = kMaxWeight;
    }
  }
  return w;
}

Tensor weighted_ce_loss(const Tensor& logits, std::span<const Stage> labels,
                        const ClassWeights& weights) {
  if (!logits.defined() || logits.rank() != 2 || logits.dim(1) != kNumStages ||
      logits.dim(0) != labels.size() || labels.empty()) {
    throw Error(Errc::ShapeMismatch,
                "loss expects logits [B,5] with B labels, B >= 1; got " +
                    (logits.defined() ? ag::shape_str(logits.shape()) : std::string("none")) +
                    " and " + std::to_string(labels.size()) + " labels");
  }
  const std::size_t B = labels.size();
  const std::size_t C = kNumStages;
  const auto x = logits.values();
  std::vector<double> prob(B * C);
  std::vector<double> w(B);
  double total = 0.0;
  double weight_sum = 0.0;
  for (std::size_t b = 0; b < B; ++b) {
    const double* row = x.data() + b * C;
    const double mx = *std::max_element(row, row + C);
    double z = 0.0;
    for (std::size_t c = 0; c < C; ++c) z += std::exp(row[c] - mx);
    const double lse = mx + std::log(z);
    for (std::size_t c = 0; c < C; ++c) prob[b * C + c] = std::exp(row[c] - lse);
    const auto y = static_cast<std::size_t>(stage_code(labels[b]));
    w[b] = weights.weight[y];
    total += w[b] * (lse - row[y]);
    weight_sum += w[b];
  }
  std::vector<std::size_t> targets(B);
  for (std::size_t b = 0; b < B; ++b) targets[b] = static_cast<std::size_t>(stage_code(labels[b]));
  return ag::detail::make_result(
      {}, {total / weight_sum}, {logits},
      [logits, prob = std::move(prob), w = std::move(w), targets = std::move(targets), B, C,
       weight_sum](ag::Node& out) {
        double* gx = ag::detail::grad_of(logits);
        if (gx == nullptr) return;
        const double g = out.grad[0];
        for (std::size_t b = 0; b < B; ++b) {
          const double s = g * w[b] / weight_sum;
          for (std::size_t c = 0; c < C; ++c) {
            gx[b * C + c] += s * (prob[b * C + c] - (c == targets[b] ? 1.0 : 0.0));
          }
        }
      });
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& why) { throw Error(Errc::ConfigError, why); };
  if (!(learning_rate > 0.0)) fail("learning_rate must be positive");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0)) fail("adam_beta1 must lie in [0, 1)");
  if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) fail("adam_beta2 must lie in [0, 1)");
  if (!(adam_eps > 0.0)) fail("adam_eps must be positive");
  if (max_training_passes < 1) fail("max_training_passes must be >= 1");
}

AdamState make_adam_state(const ag::ParamStore& params) {
  AdamState s;
  for (const auto& e : params.entries()) {
    const std::size_t n = e.trainable ? e.tensor.numel() : 0;
    s.m.emplace_back(n, 0.0);
    s.v.emplace_back(n, 0.0);
  }
  return s;
}

void adam_step(ag::ParamStore& params, AdamState& state, const TrainConfig& cfg) {
  auto entries = params.entries();
  if (state.m.size() != entries.size() || state.v.size() != entries.size()) {
    throw Error(Errc::ShapeMismatch, "optimizer state does not match parameter store");
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    if (e.trainable && !e.tensor.has_grad()) {
      throw Error(Errc::MissingGradient, "no gradient for '" + e.name + "'");
    }
  }
  const auto t = static_cast<double>(++state.step);
  const double c1 = 1.0 - std::pow(cfg.adam_beta1, t);
  const double c2 = 1.0 - std::pow(cfg.adam_beta2, t);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    auto& e = entries[i];
    if (!e.trainable) continue;
    auto value = e.tensor.mutable_values();
    const auto grad = e.tensor.grad();
    auto& m = state.m[i];
    auto& v = state.v[i];
    if (m.size() != value.size() || v.size() != value.size()) {
      throw Error(Errc::ShapeMismatch, "optimizer moments do not match '" + e.name + "'");
    }
    for (std::size_t j = 0; j < value.size(); ++j) {
      const double g = grad[j];
      m[j] = cfg.adam_beta1 * m[j] + (1.0 - cfg.adam_beta1) * g;
      v[j] = cfg.adam_beta2 * v[j] + (1.0 - cfg.adam_beta2) * g * g;
      value[j] -= cfg.learning_rate * (m[j] / c1) / (std::sqrt(v[j] / c2) + cfg.adam_eps);
    }
  }
}

TrainResult train(std::span<const edf::LabeledEpoch> epochs, const eval::Split& split,
                  const TrainConfig& cfg, const model::ModelConfig& model_cfg,
                  const preprocess::AugmentConfig& augment_cfg, const TrainHooks& hooks) {
  cfg.validate();
  model_cfg.validate();
  augment_cfg.validate();
  if (split.train.empty()) throw Error(Errc::EmptySplit, "training split is empty");
  for (std::size_t i : split.train) {
    if (i >= epochs.size()) throw Error(Errc::EmptySplit, "split index out of range");
  }
  {
    const std::set<std::size_t> train_set(split.train.begin(), split.train.end());
    for (std::size_t i : split.validation) {
      if (i >= epochs.size()) throw Error(Errc::EmptySplit, "split index out of range");
      if (train_set.contains(i)) {
        throw Error(Errc::SplitOverlap,
                    "epoch " + std::to_string(i) + " is in both training and validation");
      }
    }
  }

  model::Msdan net(model_cfg, cfg.seed);
  AdamState adam = make_adam_state(net.params());
  TrainResult result;
  result.weights = split_class_weights(epochs, split.train);
  spdlog::info("class weights N3={:.4f} N2={:.4f} N1={:.4f} R={:.4f} W={:.4f}",
               result.weights.weight[0], result.weights.weight[1], result.weights.weight[2],
               result.weights.weight[3], result.weights.weight[4]);

  const std::size_t L = model_cfg.input_length;
  double best_kappa = -std::numeric_limits<double>::infinity();
  std::vector<std::size_t> order = split.train;

  for (std::size_t pass = 1; pass <= cfg.max_training_passes; ++pass) {
    auto shuffle_rng = preprocess::derive_rng(cfg.seed, 1, pass);
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t B = std::min(cfg.batch_size, order.size() - start);
      std::vector<double> x(B * L);
      std::vector<Stage> labels(B);
      for (std::size_t b = 0; b < B; ++b) {
        const std::size_t idx = order[start + b];
        const edf::LabeledEpoch* e = &epochs[idx];
        edf::LabeledEpoch augmented;
        if (cfg.augment) {
          auto rng = preprocess::derive_rng(augment_cfg.rng_seed, pass, idx);
          augmented = preprocess::augment(*e, augment_cfg, rng);
          e = &augmented;
        }
        if (e->samples.size() != L) {
          throw Error(Errc::ShapeMismatch, "epoch has " + std::to_string(e->samples.size()) +
                                               " samples, model expects " + std::to_string(L));
        }
        std::copy(e->samples.begin(), e->samples.end(), x.begin() + static_cast<long>(b * L));
        labels[b] = e->label;
      }
      net.params().zero_grad();
      Tensor logits = net.forward(Tensor({B, 1, L}, std::move(x)), model::Mode::Train);
      Tensor loss = weighted_ce_loss(logits, labels, result.weights);
      loss_sum += loss.item();
      ++batches;
      ag::backward(loss);
      adam_step(net.params(), adam, cfg);
    }

    PassRecord rec;
    rec.pass = pass;
    rec.step = adam.step;
    rec.train_loss = loss_sum / static_cast<double>(batches);
    bool improved = split.validation.empty();
    if (!split.validation.empty()) {
      const auto report = eval::evaluate(net, epochs, split.validation);
      if (report.summary) {
        rec.val_overall_accuracy = report.summary->overall_accuracy;
        rec.val_kappa = report.summary->kappa;
        rec.val_macro_f1 = report.summary->macro_f1;
      }
      const double kappa = rec.val_kappa.value_or(-std::numeric_limits<double>::infinity());
      improved = result.best_pass == 0 || kappa > best_kappa;
      if (improved) best_kappa = kappa;
    }
    if (improved) {
      result.best_params = net.params().clone();
      result.best_pass = pass;
    }
    spdlog::info("pass {} step {} loss {:.6f} val_kappa {}", pass, rec.step, rec.train_loss,
                 rec.val_kappa ? std::to_string(*rec.val_kappa) : std::string("n/a"));
    result.log.push_back(rec);
    if (hooks.on_pass) hooks.on_pass(rec);
    if (cfg.checkpoint_every > 0 && pass % cfg.checkpoint_every == 0 && hooks.on_checkpoint) {
      hooks.on_checkpoint(pass, net.params());
    }
  }
  return result;
}

void write_training_log(const std::filesystem::path& path, std::span<const PassRecord> log) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  out << "pass,step,train_loss,val_overall_acc,val_kappa,val_macro_f1\n";
  for (const auto& r : log) {
    out << r.pass << ',' << r.step << ',' << format_optional(r.train_loss) << ','
        << format_optional(r.val_overall_accuracy) << ',' << format_optional(r.val_kappa) << ','
        << format_optional(r.val_macro_f1) << '\n';
  }
  if (!out) throw Error(Errc::IoError, "write failed for " + path.string());
}

}  // namespace msdan::train
