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

#include "dec2enc/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "dec2enc/ops.hpp"
#include "dec2enc/rng.hpp"

namespace dec2enc {

void ModelSpec::validate() const {
  encoder.validate();
  pooling.validate(encoder.d_model);
  if (task.kind == TaskKind::kClassification && task.n_classes < 2) {
    throw std::invalid_argument("TaskSpec: classification needs at least 2 classes");
  }
  if (task.hidden == 0) throw std::invalid_argument("TaskSpec: hidden width must be positive");
}

bool head_scores_per_vector(const ModelSpec& spec) {
  const bool token_pooling = std::holds_alternative<FirstK>(spec.pooling.kind) ||
                             std::holds_alternative<LastK>(spec.pooling.kind);
  const std::size_t arity = spec.pooling.arity();
  return spec.task.kind == TaskKind::kClassification && token_pooling && arity > 1 &&
         arity == spec.task.n_classes;
}

std::vector<std::pair<std::string, Tensor>> HeadParams::named() const {
  return {{"head.w1", w1}, {"head.b1", b1}, {"head.w2", w2}, {"head.b2", b2}};
}

namespace {

Tensor random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  const double stddev = 1.0 / std::sqrt(static_cast<double>(rows));
  std::vector<double> v(rows * cols);
  for (double& x : v) x = rng.normal() * stddev;
  Tensor t(Shape{rows, cols}, std::move(v));
  t.set_requires_grad(true);
  return t;
}

Tensor zeros_param(std::size_t n) {
  Tensor t(Shape{n}, 0.0);
  t.set_requires_grad(true);
  return t;
}

std::size_t output_width(const ModelSpec& spec) {
  if (head_scores_per_vector(spec)) return 1;
  return spec.task.kind == TaskKind::kClassification ? spec.task.n_classes : 1;
}

bool recording(const Tensor& t) { return current_tape() != nullptr && t.requires_grad(); }

void record_loss(const Tensor& input, const Tensor& loss, std::vector<double> grad_per_unit) {
  loss.node()->requires_grad = true;
  detail::NodePtr in = input.node();
  current_tape()->record({in}, loss.node(), [in, grad = std::move(grad_per_unit)](std::span<const double> g) {
    for (std::size_t i = 0; i < grad.size(); ++i) in->grad[i] += g[0] * grad[i];
  });
}

}  // namespace

HeadParams init_head(const ModelSpec& spec, std::uint64_t seed) {
  const std::size_t d = spec.encoder.d_model;
  HeadParams h;
  h.per_vector = head_scores_per_vector(spec);
  const std::size_t in_width = h.per_vector ? d : d * spec.pooling.arity();
  const std::uint64_t base = combine_seed(seed, 0x4ead);
  h.w1 = random_matrix(in_width, spec.task.hidden, combine_seed(base, 1));
  h.b1 = zeros_param(spec.task.hidden);
  h.w2 = random_matrix(spec.task.hidden, output_width(spec), combine_seed(base, 2));
  h.b2 = zeros_param(output_width(spec));
  return h;
}

Tensor apply_head(const ModelSpec& spec, const HeadParams& head, const Tensor& pooled) {
  const std::size_t b = pooled.shape()[0];
  const std::size_t arity = pooled.shape()[1];
  const std::size_t d = pooled.shape()[2];
  if (head.per_vector) {
    const Tensor h = ops::gelu(ops::add(ops::matmul(pooled, head.w1), head.b1));
    const Tensor out = ops::add(ops::matmul(h, head.w2), head.b2);  // [B, A, 1]
    return ops::reshape(out, Shape{b, arity});
  }
  const Tensor flat = ops::reshape(pooled, Shape{b, arity * d});
  const Tensor h = ops::gelu(ops::add(ops::matmul(flat, head.w1), head.b1));
  const Tensor out = ops::add(ops::matmul(h, head.w2), head.b2);
  if (spec.task.kind == TaskKind::kClassification) return out;
  return ops::reshape(out, Shape{b});
}

std::vector<std::pair<std::string, Tensor>> Model::named_parameters() const {
  auto out = encoder.named();
  for (auto& p : pooler.named()) out.push_back(std::move(p));
  for (auto& p : head.named()) out.push_back(std::move(p));
  return out;
}

std::vector<Tensor> Model::parameters() const {
  std::vector<Tensor> out;
  for (auto& [name, t] : named_parameters()) out.push_back(t);
  return out;
}

Model init_model(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  Model m;
  m.spec = spec;
  m.encoder = init_params(spec.encoder, combine_seed(seed, 1));
  m.pooler = init_pooler(spec.pooling, spec.encoder.d_model, combine_seed(seed, 2));
  m.head = init_head(spec, combine_seed(seed, 3));
  return m;
}

Tensor predict(const Model& model, const Batch& batch, const RunMode& mode) {
  const HiddenStates hidden = forward(model.spec.encoder, model.encoder, batch, mode);
  const Tensor pooled = pool(model.spec.pooling, model.pooler, hidden);
  return apply_head(model.spec, model.head, pooled);
}

RankingBatch RankingBatch::from_examples(std::span<const RankingExample> examples, PaddingSide side,
                                         std::size_t pad_to) {
  if (examples.empty()) throw std::invalid_argument("RankingBatch: no lists");
  const std::size_t m = examples.front().docs.size();
  std::vector<std::vector<int>> seqs;
  std::vector<double> labels;
  for (const auto& ex : examples) {
    if (ex.docs.size() != m || ex.labels.size() != m || m == 0) {
      throw ShapeError("RankingBatch: every list needs " + std::to_string(m) + " docs and labels");
    }
    for (std::size_t j = 0; j < m; ++j) seqs.push_back(join_query_doc(ex.query, ex.docs[j]));
    labels.insert(labels.end(), ex.labels.begin(), ex.labels.end());
  }
  const Batch flat = Batch::from_sequences(seqs, side, pad_to);
  RankingBatch rb;
  rb.lists = examples.size();
  rb.docs = m;
  rb.length = flat.length;
  rb.token_ids = flat.token_ids;
  rb.pad_mask = flat.pad_mask;
  rb.lengths = flat.lengths;
  rb.labels = Tensor(Shape{rb.lists, m}, std::move(labels));
  return rb;
}

Batch RankingBatch::flatten() const {
  Batch b;
  b.rows = lists * docs;
  b.length = length;
  b.token_ids = token_ids;
  b.pad_mask = pad_mask;
  b.lengths = lengths;
  if (token_ids.size() != b.rows * length || lengths.size() != b.rows) {
    throw ShapeError("RankingBatch: token ids do not match [" + std::to_string(lists) + ", " +
                     std::to_string(docs) + ", " + std::to_string(length) + "]");
  }
  if (labels.defined() && labels.shape() != Shape{lists, docs}) {
    throw ShapeError("RankingBatch: labels " + shape_to_string(labels.shape()) + " do not match [" +
                     std::to_string(lists) + ", " + std::to_string(docs) + "]");
  }
  return b;
}

Tensor score_list(const Model& model, const RankingBatch& batch, const RunMode& mode) {
  if (model.spec.task.kind != TaskKind::kRanking) {
    throw std::invalid_argument("score_list: model head is not a ranking head");
  }
  const Tensor scores = predict(model, batch.flatten(), mode);  // [B*M]
  return ops::reshape(scores, Shape{batch.lists, batch.docs});
}

Tensor listwise_softmax_loss(const Tensor& labels, const Tensor& scores) {
  if (labels.shape() != scores.shape() || scores.dim() != 2) {
    throw ShapeError("listwise_softmax_loss: labels " + shape_to_string(labels.shape()) + " vs scores " +
                     shape_to_string(scores.shape()));
  }
  const std::size_t b = scores.shape()[0];
  const std::size_t m = scores.shape()[1];
  const auto y = labels.data();
  const auto s = scores.data();
  std::vector<double> grad(b * m);
  double total = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    double label_mass = 0.0;
    double mx = s[i * m];
    for (std::size_t j = 0; j < m; ++j) {
      if (y[i * m + j] < 0.0) throw std::invalid_argument("listwise_softmax_loss: negative label");
      label_mass += y[i * m + j];
      mx = std::max(mx, s[i * m + j]);
    }
    if (label_mass <= 0.0) {
      throw std::invalid_argument("listwise_softmax_loss: list " + std::to_string(i) + " has no positive label");
    }
    double z = 0.0;
    for (std::size_t j = 0; j < m; ++j) z += std::exp(s[i * m + j] - mx);
    const double lse = mx + std::log(z);
    for (std::size_t j = 0; j < m; ++j) {
      const double yj = y[i * m + j];
      total += yj * (lse - s[i * m + j]);
      const double p = std::exp(s[i * m + j] - lse);
      grad[i * m + j] = (label_mass * p - yj) / static_cast<double>(b);
    }
  }
  Tensor loss = Tensor::scalar(total / static_cast<double>(b));
  if (recording(scores)) record_loss(scores, loss, std::move(grad));
  return loss;
}

Tensor classification_loss(std::span<const int> labels, const Tensor& logits) {
  if (logits.dim() != 2 || logits.shape()[0] != labels.size()) {
    throw ShapeError("classification_loss: " + std::to_string(labels.size()) + " labels vs logits " +
                     shape_to_string(logits.shape()));
  }
  const std::size_t b = logits.shape()[0];
  const std::size_t c = logits.shape()[1];
  const auto s = logits.data();
  std::vector<double> grad(b * c);
  double total = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= c) {
      throw std::out_of_range("classification_loss: label " + std::to_string(labels[i]) + " outside [0, " +
                              std::to_string(c) + ")");
    }
    double mx = s[i * c];
    for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, s[i * c + j]);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) z += std::exp(s[i * c + j] - mx);
    const double lse = mx + std::log(z);
    total += lse - s[i * c + labels[i]];
    for (std::size_t j = 0; j < c; ++j) {
      const double p = std::exp(s[i * c + j] - lse);
      grad[i * c + j] = (p - (static_cast<std::size_t>(labels[i]) == j ? 1.0 : 0.0)) / static_cast<double>(b);
    }
  }
  Tensor loss = Tensor::scalar(total / static_cast<double>(b));
  if (recording(logits)) record_loss(logits, loss, std::move(grad));
  return loss;
}

Tensor regression_loss(std::span<const double> targets, const Tensor& preds) {
  if (preds.numel() != targets.size() || preds.dim() != 1) {
    throw ShapeError("regression_loss: " + std::to_string(targets.size()) + " targets vs preds " +
                     shape_to_string(preds.shape()));
  }
  const std::size_t b = targets.size();
  const auto p = preds.data();
  std::vector<double> grad(b);
  double total = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    const double r = p[i] - targets[i];
    total += r * r;
    grad[i] = 2.0 * r / static_cast<double>(b);
  }
  Tensor loss = Tensor::scalar(total / static_cast<double>(b));
  if (recording(preds)) record_loss(preds, loss, std::move(grad));
  return loss;
}

Adam::Adam(std::vector<Tensor> params, AdamConfig config) : params_(std::move(params)), config_(config) {
  for (const auto& p : params_) {
    m_.emplace_back(p.numel(), 0.0);
    v_.emplace_back(p.numel(), 0.0);
  }
}

void Adam::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = params_[i];
    if (!p.has_grad()) continue;
    const auto g = p.grad();
    auto w = p.mutable_data();
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = config_.beta1 * m[j] + (1.0 - config_.beta1) * g[j];
      v[j] = config_.beta2 * v[j] + (1.0 - config_.beta2) * g[j] * g[j];
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      w[j] -= config_.lr * mhat / (std::sqrt(vhat) + config_.eps);
    }
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

namespace {

// Cycles through shuffled epochs of [0, n).
class BatchSampler {
 public:
  BatchSampler(std::size_t n, std::uint64_t seed) : n_(n), seed_(seed) { reshuffle(); }

  std::vector<std::size_t> next(std::size_t batch_size) {
    std::vector<std::size_t> out;
    while (out.size() < batch_size) {
      if (pos_ == order_.size()) {
        ++epoch_;
        reshuffle();
      }
      out.push_back(order_[pos_++]);
    }
    return out;
  }

 private:
  void reshuffle() {
    order_.resize(n_);
    std::iota(order_.begin(), order_.end(), 0);
    Rng rng(combine_seed(seed_, epoch_));
    rng.shuffle(order_.begin(), order_.end());
    pos_ = 0;
  }

  std::size_t n_;
  std::uint64_t seed_;
  std::uint64_t epoch_ = 0;
  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
};

Tensor step_loss(const Model& model, const TaskData& data, const std::vector<std::size_t>& idx,
                 const RunMode& mode) {
  const PaddingSide side = model.spec.encoder.padding_side;
  if (data.kind == TaskKind::kRanking) {
    std::vector<RankingExample> lists;
    for (std::size_t i : idx) lists.push_back(data.ranking_train[i]);
    const RankingBatch rb = RankingBatch::from_examples(lists, side);
    return listwise_softmax_loss(rb.labels, score_list(model, rb, mode));
  }
  std::vector<std::vector<int>> seqs;
  for (std::size_t i : idx) seqs.push_back(data.train[i].tokens);
  const Batch batch = Batch::from_sequences(seqs, side);
  const Tensor out = predict(model, batch, mode);
  if (data.kind == TaskKind::kClassification) {
    std::vector<int> labels;
    for (std::size_t i : idx) labels.push_back(static_cast<int>(std::lround(data.train[i].label)));
    return classification_loss(labels, out);
  }
  std::vector<double> targets;
  for (std::size_t i : idx) targets.push_back(data.train[i].label);
  return regression_loss(targets, out);
}

}  // namespace

TrainResult train(Model& model, const TaskData& data, const TrainConfig& config, std::uint64_t seed) {
  if (data.kind != model.spec.task.kind) {
    throw std::invalid_argument("train: dataset is " + to_string(data.kind) + " but the head is " +
                                to_string(model.spec.task.kind));
  }
  const std::size_t n = data.kind == TaskKind::kRanking ? data.ranking_train.size() : data.train.size();
  if (n == 0) throw std::invalid_argument("train: empty training split");
  if (config.batch_size == 0) throw std::invalid_argument("train: batch_size must be positive");

  Adam adam(model.parameters(), config.adam);
  BatchSampler sampler(n, combine_seed(seed, 0xba7c));
  TrainResult result;
  auto maybe_eval = [&](std::size_t step) {
    if (config.eval_every == 0) return;
    if (step % config.eval_every != 0 && step != config.steps) return;
    result.evals.push_back(EvalPoint{step, evaluate(model, data, config.eval_batch_size)});
  };

  maybe_eval(0);
  for (std::size_t step = 0; step < config.steps; ++step) {
    const auto idx = sampler.next(config.batch_size);
    adam.zero_grad();
    Tape tape;
    double loss_value = 0.0;
    {
      TapeScope scope(tape);
      const Tensor loss = step_loss(model, data, idx, RunMode{true, step});
      loss_value = loss.item();
      if (!std::isfinite(loss_value)) {
        std::ostringstream msg;
        msg << "training diverged at step " << step << ": loss=" << loss_value;
        throw DivergenceError(msg.str());
      }
      tape.backward(loss);
    }
    adam.step();
    result.loss_curve.push_back(loss_value);
    maybe_eval(step + 1);
  }
  return result;
}

std::vector<MetricReport> evaluate(const Model& model, const TaskData& data, std::size_t batch_size) {
  const PaddingSide side = model.spec.encoder.padding_side;
  const RunMode mode{false, 0};
  if (batch_size == 0) batch_size = 64;
  std::vector<MetricReport> reports;

  if (data.kind == TaskKind::kRanking) {
    if (data.ranking_eval.empty()) throw std::invalid_argument("evaluate: empty eval split");
    std::vector<std::vector<double>> ranked;
    const std::size_t lists_per_batch = std::max<std::size_t>(1, batch_size / data.ranking_eval.front().docs.size());
    for (std::size_t start = 0; start < data.ranking_eval.size(); start += lists_per_batch) {
      const std::size_t end = std::min(data.ranking_eval.size(), start + lists_per_batch);
      const std::span<const RankingExample> chunk(data.ranking_eval.data() + start, end - start);
      const RankingBatch rb = RankingBatch::from_examples(chunk, side);
      const Tensor scores = score_list(model, rb, mode);
      for (std::size_t i = 0; i < rb.lists; ++i) {
        const auto s = scores.data().subspan(i * rb.docs, rb.docs);
        const auto y = rb.labels.data().subspan(i * rb.docs, rb.docs);
        ranked.push_back(rank_by_scores(s, y));
      }
    }
    reports.push_back({"mrr@10", mrr_at_k(ranked, 10), ranked.size()});
    reports.push_back({"ndcg@10", mean_ndcg_at_k(ranked, 10), ranked.size()});
    return reports;
  }

  if (data.eval.empty()) throw std::invalid_argument("evaluate: empty eval split");
  std::vector<int> preds;
  std::vector<int> labels;
  std::vector<double> outputs;
  std::vector<double> targets;
  for (std::size_t start = 0; start < data.eval.size(); start += batch_size) {
    const std::size_t end = std::min(data.eval.size(), start + batch_size);
    std::vector<std::vector<int>> seqs;
    for (std::size_t i = start; i < end; ++i) seqs.push_back(data.eval[i].tokens);
    const Tensor out = predict(model, Batch::from_sequences(seqs, side), mode);
    if (data.kind == TaskKind::kClassification) {
      const std::size_t c = out.shape()[1];
      for (std::size_t r = 0; r < end - start; ++r) {
        const auto row = out.data().subspan(r * c, c);
        preds.push_back(static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin()));
        labels.push_back(static_cast<int>(std::lround(data.eval[start + r].label)));
      }
    } else {
      for (std::size_t r = 0; r < end - start; ++r) {
        outputs.push_back(out[r]);
        targets.push_back(data.eval[start + r].label);
      }
    }
  }
  if (data.kind == TaskKind::kClassification) {
    reports.push_back({"accuracy", accuracy(preds, labels), preds.size()});
    if (model.spec.task.n_classes == 2) {
      reports.push_back({"f1", f1_binary(preds, labels), preds.size()});
      reports.push_back({"matthews", matthews_corr(preds, labels), preds.size()});
    }
  } else {
    double mse = 0.0;
    for (std::size_t i = 0; i < outputs.size(); ++i) mse += (outputs[i] - targets[i]) * (outputs[i] - targets[i]);
    reports.push_back({"spearman", spearman_corr(outputs, targets), outputs.size()});
    reports.push_back({"mse", mse / static_cast<double>(outputs.size()), outputs.size()});
  }
  return reports;
}

}  // namespace dec2enc
