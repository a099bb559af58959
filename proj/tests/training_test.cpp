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

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "msdan/ops.hpp"
#include "msdan/training.hpp"
#include "support/expect.hpp"
#include "support/gradcheck.hpp"
#include "support/synthetic.hpp"

using namespace msdan;
using namespace msdan::train;
using ag::Tensor;
using msdan::testing::code_of;
using msdan::testing::random_tensor;

namespace {

// Weighted cross-entropy written directly from its definition with plain
// loops: softmax, -log p_y, weight, batch normalization by the weight sum.
double loop_loss(const std::vector<double>& logits, const std::vector<Stage>& labels,
                 const ClassWeights& w) {
  double num = 0.0, den = 0.0;
  for (std::size_t b = 0; b < labels.size(); ++b) {
    double z = 0.0;
    for (std::size_t c = 0; c < 5; ++c) z += std::exp(logits[b * 5 + c]);
    const auto y = static_cast<std::size_t>(stage_code(labels[b]));
    const double p = std::exp(logits[b * 5 + y]) / z;
    num += w.weight[y] * -std::log(p);
    den += w.weight[y];
  }
  return num / den;
}

std::array<double, kNumStages> by_code(double w, double n1, double n2, double n3, double r) {
  std::array<double, kNumStages> p{};
  p[stage_code(Stage::W)] = w;
  p[stage_code(Stage::N1)] = n1;
  p[stage_code(Stage::N2)] = n2;
  p[stage_code(Stage::N3)] = n3;
  p[stage_code(Stage::R)] = r;
  return p;
}

}  // namespace

TEST(ClassWeights, SleepEdfProportions) {
  const auto w = class_weights(by_code(0.528, 0.040, 0.238, 0.085, 0.106));
  EXPECT_NEAR(w[Stage::W], 1.000, 1e-3);
  EXPECT_NEAR(w[Stage::N1], 3.219, 1e-3);
  EXPECT_NEAR(w[Stage::N2], 1.435, 1e-3);
  EXPECT_NEAR(w[Stage::N3], 2.465, 1e-3);
  EXPECT_NEAR(w[Stage::R], 2.244, 1e-3);
  EXPECT_NEAR(w[Stage::N1], std::log(25.0), 1e-12);
}

TEST(ClassWeights, ClampsAndRejectsZero) {
  const auto w = class_weights(by_code(0.999, std::exp(-5.0), 0.002, 0.5, 0.5));
  EXPECT_EQ(w[Stage::W], 1.0);
  EXPECT_NEAR(w[Stage::N1], 5.0, 1e-12);
  EXPECT_EQ(w[Stage::N2], 5.0);
  EXPECT_EQ(code_of([] { class_weights(by_code(0.5, 0.0, 0.2, 0.2, 0.1)); }),
            Errc::ZeroProportion);
}

TEST(ClassWeights, AbsentTrainingClassTakesUpperClamp) {
  auto epochs = msdan::testing::sinusoid_dataset(10, 4, 1);
  const std::vector<std::size_t> idx{0, 1, 5, 6};  // N3, N2 only
  const auto w = split_class_weights(epochs, idx);
  EXPECT_EQ(w[Stage::N3], 1.0);
  EXPECT_EQ(w[Stage::W], 5.0);
  const auto p = class_proportions(epochs, idx);
  EXPECT_DOUBLE_EQ(p[stage_code(Stage::N2)], 0.5);
}

TEST(WeightedLoss, UniformLogitsGiveLogFive) {
  const Tensor logits = Tensor::zeros({3, 5});
  const std::vector<Stage> labels{Stage::W, Stage::N1, Stage::R};
  EXPECT_NEAR(weighted_ce_loss(logits, labels, ClassWeights{}).item(), std::log(5.0), 1e-15);
}

TEST(WeightedLoss, ConfidentCorrectPrediction) {
  const Tensor logits({1, 5}, {10, 0, 0, 0, 0});
  ClassWeights w;
  w.weight[0] = 2.0;
  const std::vector<Stage> labels{Stage::N3};
  const double expected = std::log1p(4.0 * std::exp(-10.0));  // 2 * l / 2
  const double got = weighted_ce_loss(logits, labels, w).item();
  EXPECT_NEAR(got, expected, 1e-15);
  EXPECT_NEAR(got, 1.8e-4, 0.1e-4);
}

TEST(WeightedLoss, MatchesLoopOracleOnRandomBatches) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> lab(0, 4);
  std::uniform_real_distribution<double> wd(1.0, 5.0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t B = 1 + static_cast<std::size_t>(trial % 16);
    const auto logits = random_tensor({B, 5}, 100 + trial, -6.0, 6.0);
    std::vector<Stage> labels(B);
    for (auto& s : labels) s = static_cast<Stage>(lab(rng));
    ClassWeights w;
    for (double& x : w.weight) x = wd(rng);
    const std::vector<double> v(logits.values().begin(), logits.values().end());
    EXPECT_NEAR(weighted_ce_loss(logits, labels, w).item(), loop_loss(v, labels, w), 1e-12);
  }
}

TEST(WeightedLoss, GradientMatchesFiniteDifferences) {
  ClassWeights w;
  w.weight = {2.5, 1.0, 3.2, 1.7, 4.0};
  const std::vector<Stage> labels{Stage::W, Stage::N1, Stage::N1, Stage::R, Stage::N3, Stage::N2};
  auto r = msdan::testing::check_gradients(
      [&](const std::vector<Tensor>& in) { return weighted_ce_loss(in[0], labels, w); },
      {random_tensor({6, 5}, 4, -3.0, 3.0)});
  EXPECT_LT(r.max_relative_error, 1e-6);
}

TEST(WeightedLoss, ShapeChecks) {
  const std::vector<Stage> labels{Stage::W};
  EXPECT_EQ(code_of([&] { weighted_ce_loss(Tensor::zeros({2, 5}), labels, {}); }),
            Errc::ShapeMismatch);
  EXPECT_EQ(code_of([&] { weighted_ce_loss(Tensor::zeros({1, 4}), labels, {}); }),
            Errc::ShapeMismatch);
}

TEST(Adam, ZeroGradientLeavesParametersAndDecaysMoments) {
  ag::ParamStore p;
  p.add("x", Tensor({2}, {1.0, -3.0}, true));
  TrainConfig cfg;
  auto st = make_adam_state(p);
  p.get("x").node()->ensure_grad() = {0.5, -0.25};
  adam_step(p, st, cfg);
  const auto m1 = st.m[0];
  const auto v1 = st.v[0];
  p.zero_grad();
  p.get("x").node()->ensure_grad() = {0.0, 0.0};
  adam_step(p, st, cfg);
  // The bias-corrected first moment is still nonzero, so the step continues
  // in the same direction while both moments shrink geometrically.
  EXPECT_NEAR(st.m[0][0], 0.9 * m1[0], 1e-18);
  EXPECT_NEAR(st.v[0][1], 0.999 * v1[1], 1e-18);

  ag::ParamStore q;
  q.add("y", Tensor({3}, {1.0, 2.0, 3.0}, true));
  auto sq = make_adam_state(q);
  q.get("y").node()->ensure_grad() = {0.0, 0.0, 0.0};
  adam_step(q, sq, cfg);
  EXPECT_EQ(std::vector<double>(q.get("y").values().begin(), q.get("y").values().end()),
            (std::vector<double>{1.0, 2.0, 3.0}));
}

TEST(Adam, FirstStepMovesByLearningRateAgainstGradientSign) {
  ag::ParamStore p;
  p.add("x", Tensor({3}, {0.0, 0.0, 0.0}, true));
  TrainConfig cfg;
  auto st = make_adam_state(p);
  p.get("x").node()->ensure_grad() = {3.0, -0.01, 1e3};
  adam_step(p, st, cfg);
  const auto v = p.get("x").values();
  EXPECT_NEAR(v[0], -cfg.learning_rate, 1e-10);
  EXPECT_NEAR(v[1], cfg.learning_rate, 1e-8);
  EXPECT_NEAR(v[2], -cfg.learning_rate, 1e-10);
}

TEST(Adam, MissingGradientIsAnError) {
  ag::ParamStore p;
  p.add("x", Tensor({1}, {0.0}, true));
  auto st = make_adam_state(p);
  EXPECT_EQ(code_of([&] { adam_step(p, st, TrainConfig{}); }), Errc::MissingGradient);
}

TEST(Adam, QuadraticBowlDescendsMonotonically) {
  ag::ParamStore p;
  p.add("x", Tensor({1}, {1.0}, true));
  TrainConfig cfg;
  auto st = make_adam_state(p);
  double prev = 1.0;
  double ref = 1.0, m = 0.0, v = 0.0;
  for (int step = 0; step < 500; ++step) {
    p.zero_grad();
    Tensor x = p.get("x");
    ag::backward(ag::sum(ag::mul(x, x)));
    adam_step(p, st, cfg);
    const double now = std::abs(p.get("x").item());
    EXPECT_LT(now, prev) << step;
    prev = now;

    const double g = 2.0 * ref;
    const double t = step + 1.0;
    m = cfg.adam_beta1 * m + (1.0 - cfg.adam_beta1) * g;
    v = cfg.adam_beta2 * v + (1.0 - cfg.adam_beta2) * g * g;
    ref -= cfg.learning_rate * (m / (1.0 - std::pow(cfg.adam_beta1, t))) /
           (std::sqrt(v / (1.0 - std::pow(cfg.adam_beta2, t))) + cfg.adam_eps);
  }
  EXPECT_NEAR(p.get("x").item(), ref, 1e-12);
}

TEST(Train, RejectsEmptyAndOverlappingSplits) {
  auto data = msdan::testing::sinusoid_dataset(10, 64, 1);
  TrainConfig cfg;
  cfg.max_training_passes = 1;
  const auto mc = model::ModelConfig::micro();
  EXPECT_EQ(code_of([&] { train::train(data, eval::Split{{}, {1, 2}}, cfg, mc, {}); }),
            Errc::EmptySplit);
  EXPECT_EQ(code_of([&] { train::train(data, eval::Split{{0, 1, 2}, {2, 3}}, cfg, mc, {}); }),
            Errc::SplitOverlap);
}

TEST(Train, SingleBatchOverfits) {
  auto data = msdan::testing::sinusoid_dataset(8, 64, 2);
  model::Msdan net(model::ModelConfig::micro(), 0);
  TrainConfig cfg;
  cfg.learning_rate = 0.01;
  auto st = make_adam_state(net.params());
  std::vector<double> x;
  std::vector<Stage> labels;
  for (const auto& e : data) {
    x.insert(x.end(), e.samples.begin(), e.samples.end());
    labels.push_back(e.label);
  }
  const Tensor input({8, 1, 64}, x);
  double loss = 1e9;
  int steps = 0;
  while (steps < 500 && loss >= 0.01) {
    net.params().zero_grad();
    Tensor l = weighted_ce_loss(net.forward(input, model::Mode::Train), labels, ClassWeights{});
    loss = l.item();
    ag::backward(l);
    adam_step(net.params(), st, cfg);
    ++steps;
  }
  EXPECT_LT(loss, 0.01) << "after " << steps << " steps";
}

TEST(Train, SyntheticClassesAreLearnedAndRunsAreReproducible) {
  auto data = msdan::testing::sinusoid_dataset(200, 64, 3);
  const auto folds = eval::kfold_split(data.size(), 5, 1);
  const auto split = folds.fold(0);
  TrainConfig cfg;
  cfg.learning_rate = 0.003;
  cfg.max_training_passes = 10;
  cfg.seed = 5;
  std::vector<PassRecord> seen;
  TrainHooks hooks;
  hooks.on_pass = [&](const PassRecord& r) { seen.push_back(r); };
  const auto a = train::train(data, split, cfg, model::ModelConfig::micro(), {}, hooks);
  const auto b = train::train(data, split, cfg, model::ModelConfig::micro(), {});
  ASSERT_EQ(a.log.size(), cfg.max_training_passes);
  EXPECT_EQ(seen.size(), a.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    EXPECT_EQ(a.log[i].train_loss, b.log[i].train_loss);
    EXPECT_EQ(a.log[i].val_kappa, b.log[i].val_kappa);
  }
  EXPECT_LT(a.log.back().train_loss, a.log.front().train_loss);

  model::Msdan net(model::ModelConfig::micro(), a.best_params.clone());
  const auto tr = eval::evaluate(net, data, split.train);
  const auto va = eval::evaluate(net, data, split.validation);
  ASSERT_TRUE(tr.summary && va.summary);
  EXPECT_GE(tr.summary->overall_accuracy, 95.0);
  EXPECT_GE(va.summary->overall_accuracy, 90.0);
  EXPECT_EQ(*a.log[a.best_pass - 1].val_kappa, va.summary->kappa);
}

TEST(Train, CheckpointHookAndLog) {
  auto data = msdan::testing::sinusoid_dataset(20, 64, 4);
  eval::Split split;
  for (std::size_t i = 0; i < 20; ++i) split.train.push_back(i);
  TrainConfig cfg;
  cfg.max_training_passes = 4;
  cfg.checkpoint_every = 2;
  std::vector<std::size_t> ckpts;
  TrainHooks hooks;
  hooks.on_checkpoint = [&](std::size_t pass, const ag::ParamStore&) { ckpts.push_back(pass); };
  const auto r = train::train(data, split, cfg, model::ModelConfig::micro(), {}, hooks);
  EXPECT_EQ(ckpts, (std::vector<std::size_t>{2, 4}));
  EXPECT_EQ(r.best_pass, 4u);
  EXPECT_EQ(r.log.back().step, 4u * 3u);
  EXPECT_FALSE(r.log.back().val_kappa.has_value());

  msdan::testing::TempDir dir("log");
  write_training_log(dir.path() / "log.csv", r.log);
  std::ifstream in(dir.path() / "log.csv");
  std::string header, first;
  std::getline(in, header);
  std::getline(in, first);
  EXPECT_EQ(header, "pass,step,train_loss,val_overall_acc,val_kappa,val_macro_f1");
  EXPECT_EQ(first.substr(0, 4), "1,3,");
  EXPECT_EQ(first.substr(first.size() - 3), ",,,");
}
