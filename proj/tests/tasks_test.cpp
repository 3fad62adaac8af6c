/*
 * Copyright 2026 The dec2enc Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <cmath>

#include "dec2enc/check/gradcheck.hpp"
#include "dec2enc/config_io.hpp"
#include "dec2enc/ops.hpp"
#include "dec2enc/rng.hpp"
#include "dec2enc/tasks.hpp"

namespace dec2enc {
namespace {

ModelSpec small_spec(const std::string& pooling, TaskKind kind, std::size_t n_classes = 2) {
  ModelSpec s;
  s.encoder.vocab_size = 24;
  s.encoder.d_model = 16;
  s.encoder.n_heads = 2;
  s.encoder.d_ff = 32;
  s.encoder.max_len = 32;
  s.pooling = parse_pooling(pooling);
  s.task.kind = kind;
  s.task.n_classes = n_classes;
  s.task.hidden = 16;
  return s;
}

std::vector<RankingExample> random_lists(Rng& rng, std::size_t lists, std::size_t m) {
  std::vector<RankingExample> out(lists);
  for (auto& ex : out) {
    ex.query = {4 + static_cast<int>(rng.index(10)), 4 + static_cast<int>(rng.index(10))};
    for (std::size_t j = 0; j < m; ++j) {
      std::vector<int> doc(1 + rng.index(5));
      for (auto& t : doc) t = 4 + static_cast<int>(rng.index(20));
      ex.docs.push_back(doc);
      ex.labels.push_back(j == 0 ? 1.0 : 0.0);
    }
  }
  return out;
}

TEST(ListwiseLoss, UniformScoresGiveLnM) {
  const double l = listwise_softmax_loss(Tensor({1, 4}, {1, 0, 0, 0}), Tensor({1, 4}, 0.0)).item();
  EXPECT_NEAR(l, std::log(4.0), 1e-12);
}

TEST(ListwiseLoss, LargeMarginIsTiny) {
  const double l = listwise_softmax_loss(Tensor({1, 2}, {1, 0}), Tensor({1, 2}, {10, -10})).item();
  EXPECT_NEAR(l, std::log1p(std::exp(-20.0)), 1e-15);
  EXPECT_NEAR(l, 2.06e-9, 0.01e-9);
}

TEST(ListwiseLoss, OneHotEqualsCrossEntropy) {
  Rng rng(2);
  const Tensor s = check::random_constant({3, 5}, rng);
  const std::vector<int> hot = {0, 3, 4};
  Tensor y({3, 5}, 0.0);
  for (std::size_t i = 0; i < 3; ++i) y.mutable_data()[i * 5 + hot[i]] = 1.0;
  EXPECT_NEAR(listwise_softmax_loss(y, s).item(), classification_loss(hot, s).item(), 1e-14);
}

TEST(ListwiseLoss, ShiftInvariantAndMonotone) {
  Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    const Tensor s = check::random_constant({2, 6}, rng);
    Tensor y({2, 6}, 0.0);
    y.mutable_data()[rng.index(6)] = 1.0;
    y.mutable_data()[6 + rng.index(6)] = 2.0;
    Tensor shifted = s.detach();
    for (std::size_t j = 0; j < 6; ++j) shifted.mutable_data()[j] += 7.5;
    EXPECT_NEAR(listwise_softmax_loss(y, s).item(), listwise_softmax_loss(y, shifted).item(), 1e-9);

    Tensor raised = s.detach();
    for (std::size_t j = 0; j < 6; ++j) {
      if (y[j] > 0) raised.mutable_data()[j] += 0.5;
    }
    EXPECT_LT(listwise_softmax_loss(y, raised).item(), listwise_softmax_loss(y, s).item());
  }
}

TEST(ListwiseLoss, Errors) {
  EXPECT_THROW(listwise_softmax_loss(Tensor({1, 3}, 0.0), Tensor({1, 3}, 0.0)), std::invalid_argument);
  EXPECT_THROW(listwise_softmax_loss(Tensor({1, 2}, {1, -1}), Tensor({1, 2}, 0.0)), std::invalid_argument);
  EXPECT_THROW(listwise_softmax_loss(Tensor({1, 3}, 1.0), Tensor({1, 2}, 0.0)), ShapeError);
}

TEST(ClassificationLoss, ClosedForms) {
  EXPECT_NEAR(classification_loss(std::vector<int>{1}, Tensor({1, 3}, 0.0)).item(), std::log(3.0), 1e-12);
  EXPECT_LT(classification_loss(std::vector<int>{0}, Tensor({1, 2}, {20, 0})).item(), 1e-8);
  EXPECT_THROW(classification_loss(std::vector<int>{2}, Tensor({1, 2}, 0.0)), std::out_of_range);
}

TEST(RegressionLoss, ClosedForms) {
  EXPECT_EQ(regression_loss(std::vector<double>{0.5, 1}, Tensor({2}, {0.5, 1})).item(), 0.0);
  EXPECT_DOUBLE_EQ(regression_loss(std::vector<double>{0, 0}, Tensor({2}, {1, 3})).item(), 5.0);
}

TEST(RegressionLoss, GradientIsTwiceResidualOverB) {
  Tensor p({2}, {1, 3});
  p.set_requires_grad(true);
  Tape tape;
  {
    TapeScope scope(tape);
    tape.backward(regression_loss(std::vector<double>{0, 1}, p));
  }
  EXPECT_DOUBLE_EQ(p.grad()[0], 1.0);
  EXPECT_DOUBLE_EQ(p.grad()[1], 2.0);
}

TEST(Head, OutputWidths) {
  Rng rng(1);
  const Batch b = Batch::from_sequences({{4, 5, 6, 7}, {8, 9, 10}}, PaddingSide::kRight);
  EXPECT_EQ(predict(init_model(small_spec("mean", TaskKind::kClassification, 3), 1), b, {}).shape(), (Shape{2, 3}));
  const ModelSpec per = small_spec("first_k:3", TaskKind::kClassification, 3);
  EXPECT_TRUE(head_scores_per_vector(per));
  EXPECT_EQ(predict(init_model(per, 1), b, {}).shape(), (Shape{2, 3}));
  EXPECT_FALSE(head_scores_per_vector(small_spec("first_k:2", TaskKind::kClassification, 3)));
  EXPECT_EQ(predict(init_model(small_spec("last_k:2", TaskKind::kRegression), 1), b, {}).shape(), (Shape{2}));
}

TEST(ScoreList, MatchesPerDocumentLoop) {
  Rng rng(7);
  for (const std::string pooling : {"mean", "last_k:1", "attention_kv:H2:V2"}) {
    for (PaddingSide side : {PaddingSide::kLeft, PaddingSide::kRight}) {
      ModelSpec spec = small_spec(pooling, TaskKind::kRanking);
      spec.encoder.padding_side = side;
      const Model model = init_model(spec, 3);
      const auto lists = random_lists(rng, 2, 3);
      const RankingBatch rb = RankingBatch::from_examples(lists, side);
      const Tensor scores = score_list(model, rb, {});
      ASSERT_EQ(scores.shape(), (Shape{2, 3}));
      for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
          const Batch one = Batch::from_sequences({join_query_doc(lists[i].query, lists[i].docs[j])}, side);
          EXPECT_NEAR(scores[i * 3 + j], predict(model, one, {})[0], 1e-12);
        }
      }
    }
  }
}

TEST(ScoreList, PermutingDocumentsPermutesScores) {
  Rng rng(8);
  const Model model = init_model(small_spec("mean", TaskKind::kRanking), 3);
  auto lists = random_lists(rng, 1, 4);
  const Tensor a = score_list(model, RankingBatch::from_examples(lists, PaddingSide::kRight), {});
  std::swap(lists[0].docs[0], lists[0].docs[3]);
  std::swap(lists[0].labels[0], lists[0].labels[3]);
  const Tensor b = score_list(model, RankingBatch::from_examples(lists, PaddingSide::kRight), {});
  EXPECT_NEAR(a[0], b[3], 1e-12);
  EXPECT_NEAR(a[3], b[0], 1e-12);
  EXPECT_NEAR(a[1], b[1], 1e-12);
}

TEST(ScoreList, RejectsInconsistentShapes) {
  Rng rng(9);
  auto lists = random_lists(rng, 2, 3);
  lists[1].docs.pop_back();
  EXPECT_THROW(RankingBatch::from_examples(lists, PaddingSide::kRight), ShapeError);
  RankingBatch rb = RankingBatch::from_examples(random_lists(rng, 2, 3), PaddingSide::kRight);
  rb.labels = Tensor({2, 2}, 1.0);
  EXPECT_THROW(rb.flatten(), ShapeError);
}

TEST(Adam, FirstStepMovesByLr) {
  Tensor w({2}, {1.0, -1.0});
  w.set_requires_grad(true);
  Adam adam({w}, AdamConfig{0.1});
  Tape tape;
  {
    TapeScope scope(tape);
    tape.backward(ops::sum(ops::mul(w, Tensor({2}, {3.0, -0.5}))));
  }
  adam.step();
  // Bias-corrected first step is lr * g / (|g| + eps').
  EXPECT_NEAR(w[0], 0.9, 1e-7);
  EXPECT_NEAR(w[1], -0.9, 1e-7);
  EXPECT_EQ(adam.steps_taken(), 1u);
}

// Separable two-class data: class decided by which half of the content
// range the tokens come from.
TaskData separable_task(Rng& rng, std::size_t n) {
  TaskData d;
  d.kind = TaskKind::kClassification;
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % 2);
    std::vector<int> seq(4 + rng.index(5));
    for (auto& t : seq) t = 4 + 10 * label + static_cast<int>(rng.index(10));
    d.train.push_back({seq, static_cast<double>(label)});
  }
  d.eval = d.train;
  return d;
}

TEST(Train, SeparableTaskReachesHighTrainAccuracy) {
  Rng rng(11);
  const TaskData data = separable_task(rng, 256);
  Model model = init_model(small_spec("mean", TaskKind::kClassification), 5);
  TrainConfig cfg;
  cfg.steps = 200;
  train(model, data, cfg, 5);
  EXPECT_GE(evaluate(model, data).front().value, 0.95);
}

TEST(Train, ZeroLrLeavesParamsAndMetricsUnchanged) {
  Rng rng(12);
  const TaskData data = separable_task(rng, 64);
  Model model = init_model(small_spec("mean", TaskKind::kClassification), 5);
  std::vector<std::vector<double>> before;
  for (const auto& t : model.parameters()) before.emplace_back(t.data().begin(), t.data().end());
  TrainConfig cfg;
  cfg.steps = 10;
  cfg.adam.lr = 0.0;
  cfg.eval_every = 5;
  const TrainResult r = train(model, data, cfg, 1);
  const auto params = model.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    for (std::size_t k = 0; k < params[i].numel(); ++k) EXPECT_EQ(params[i][k], before[i][k]);
  }
  ASSERT_EQ(r.evals.size(), 3u);
  for (const auto& e : r.evals) EXPECT_EQ(e.metrics.front().value, r.evals.front().metrics.front().value);
}

TEST(Train, SameSeedSameLossCurve) {
  Rng rng(13);
  const TaskData data = separable_task(rng, 64);
  ModelSpec spec = small_spec("attention_q:H2:V2", TaskKind::kClassification);
  spec.encoder.attn_dropout = 0.1;
  spec.encoder.ffn_dropout = 0.1;
  TrainConfig cfg;
  cfg.steps = 15;
  Model a = init_model(spec, 2), b = init_model(spec, 2);
  const auto ra = train(a, data, cfg, 9);
  const auto rb = train(b, data, cfg, 9);
  EXPECT_EQ(ra.loss_curve, rb.loss_curve);
}

TEST(Train, RejectsMismatchedTask) {
  Rng rng(14);
  const TaskData data = separable_task(rng, 8);
  Model model = init_model(small_spec("mean", TaskKind::kRegression), 1);
  EXPECT_THROW(train(model, data, TrainConfig{}, 0), std::invalid_argument);
}

TEST(Train, DivergenceIsReported) {
  Rng rng(15);
  TaskData data;
  data.kind = TaskKind::kRegression;
  for (int i = 0; i < 8; ++i) data.train.push_back({{4, 5, 6}, i % 2 ? 1e300 : -1e300});
  data.eval = data.train;
  Model model = init_model(small_spec("mean", TaskKind::kRegression), 1);
  TrainConfig cfg;
  cfg.steps = 3;
  EXPECT_THROW(train(model, data, cfg, 0), DivergenceError);
}

}  // namespace
}  // namespace dec2enc
