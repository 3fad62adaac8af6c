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

#ifndef DEC2ENC_TASKS_HPP_
#define DEC2ENC_TASKS_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dec2enc/dataset.hpp"
#include "dec2enc/encoder.hpp"
#include "dec2enc/metrics.hpp"
#include "dec2enc/pooling.hpp"
#include "dec2enc/tensor.hpp"

namespace dec2enc {

struct TaskSpec {
  TaskKind kind = TaskKind::kClassification;
  std::size_t n_classes = 2;
  std::size_t hidden = 64;  // width of the head's hidden layer
};

struct ModelSpec {
  EncoderConfig encoder;
  PoolingSpec pooling;
  TaskSpec task;

  void validate() const;
};

// Two-layer perceptron on top of the pooled vectors.
//
// When a First-K/Last-K pooler produces one vector per class (k ==
// n_classes > 1), a shared scorer maps each vector to its class logit.
// Otherwise the pooled vectors are concatenated and mapped to n_classes
// logits (classification) or a single score (regression, ranking).
struct HeadParams {
  Tensor w1, b1, w2, b2;
  bool per_vector = false;

  std::vector<std::pair<std::string, Tensor>> named() const;
};

bool head_scores_per_vector(const ModelSpec& spec);
HeadParams init_head(const ModelSpec& spec, std::uint64_t seed);

// pooled [B, A, D] -> logits [B, C] (classification) or scores [B].
Tensor apply_head(const ModelSpec& spec, const HeadParams& head, const Tensor& pooled);

struct Model {
  ModelSpec spec;
  EncoderParams encoder;
  PoolerParams pooler;
  HeadParams head;

  std::vector<std::pair<std::string, Tensor>> named_parameters() const;
  std::vector<Tensor> parameters() const;
};

Model init_model(const ModelSpec& spec, std::uint64_t seed);

// Encoder -> pooler -> head for a padded batch.
Tensor predict(const Model& model, const Batch& batch, const RunMode& mode);

// Listwise input [B, M, L] with relevance labels [B, M].
struct RankingBatch {
  std::size_t lists = 0;
  std::size_t docs = 0;
  std::size_t length = 0;
  std::vector<int> token_ids;
  std::vector<std::uint8_t> pad_mask;
  std::vector<std::size_t> lengths;  // [B * M]
  Tensor labels;  // [B, M]

  // Sequences are joined query/doc pairs, all lists of equal size.
  static RankingBatch from_examples(std::span<const RankingExample> examples, PaddingSide side,
                                    std::size_t pad_to = 0);
  // The [B * M, L] view fed to the encoder.
  Batch flatten() const;
};

// Flattens to [B*M, L], scores every row, and reshapes the scores to [B, M].
Tensor score_list(const Model& model, const RankingBatch& batch, const RunMode& mode);

// Mean over lists of -sum_j y_j log softmax(scores)_j. Labels are used as
// given; each list needs a positive label.
Tensor listwise_softmax_loss(const Tensor& labels, const Tensor& scores);
// Mean softmax cross-entropy, logits [B, C].
Tensor classification_loss(std::span<const int> labels, const Tensor& logits);
// Mean squared error, preds [B].
Tensor regression_loss(std::span<const double> targets, const Tensor& preds);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam(std::vector<Tensor> params, AdamConfig config);
  void step();
  void zero_grad();
  std::size_t steps_taken() const { return t_; }

 private:
  std::vector<Tensor> params_;
  AdamConfig config_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  std::size_t t_ = 0;
};

struct TrainConfig {
  std::size_t steps = 500;
  std::size_t batch_size = 16;  // sequences, or lists for ranking
  AdamConfig adam;
  std::size_t eval_every = 0;  // 0 disables periodic evaluation
  std::size_t eval_batch_size = 64;
};

struct EvalPoint {
  std::size_t step = 0;
  std::vector<MetricReport> metrics;
};

struct TrainResult {
  std::vector<double> loss_curve;
  std::vector<EvalPoint> evals;
};

// Raised when the training loss stops being finite.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Deterministic for a given (model init, data, seed).
TrainResult train(Model& model, const TaskData& data, const TrainConfig& config, std::uint64_t seed);

// Metrics on the eval split: accuracy (+ f1/matthews for two classes),
// spearman + mse for regression, mrr@10 + ndcg@10 for ranking.
std::vector<MetricReport> evaluate(const Model& model, const TaskData& data, std::size_t batch_size = 64);

}  // namespace dec2enc

#endif  // DEC2ENC_TASKS_HPP_
