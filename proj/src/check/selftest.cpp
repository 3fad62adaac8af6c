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

#include "dec2enc/check/selftest.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <ostream>
#include <sstream>

#include "dec2enc/check/gradcheck.hpp"
#include "dec2enc/check/oracles.hpp"
#include "dec2enc/config_io.hpp"
#include "dec2enc/encoder.hpp"
#include "dec2enc/metrics.hpp"
#include "dec2enc/ops.hpp"
#include "dec2enc/tasks.hpp"

namespace dec2enc::check {

namespace {

using Fn = std::function<Tensor(const std::vector<Tensor>&)>;

struct GradCase {
  Fn fn;
  std::vector<Tensor> inputs;
};

// Reduces any output to a scalar along a random direction.
Fn projected(std::function<Tensor(const std::vector<Tensor>&)> op, const Shape& out_shape, Rng& rng) {
  const Tensor dir = random_constant(out_shape, rng);
  return [op = std::move(op), dir](const std::vector<Tensor>& in) { return ops::sum(ops::mul(op(in), dir)); };
}

using CaseMaker = std::function<GradCase(Rng&, std::size_t)>;

template <class T>
const T& pick(const std::vector<T>& options, std::size_t i) {
  return options[i % options.size()];
}

std::vector<int> random_ids(Rng& rng, std::size_t n, std::size_t lo, std::size_t hi) {
  std::vector<int> ids(n);
  for (auto& id : ids) id = static_cast<int>(lo + rng.index(hi - lo));
  return ids;
}

GradCase binary_case(Rng& rng, std::size_t i, Tensor (*op)(const Tensor&, const Tensor&)) {
  static const std::vector<std::pair<Shape, Shape>> shapes = {
      {{3, 4}, {3, 4}}, {{2, 3, 4}, {4}}, {{2, 1, 3}, {1, 4, 3}}};
  const auto& [sa, sb] = pick(shapes, i);
  Tensor a = random_tensor(sa, rng), b = random_tensor(sb, rng);
  const Shape out = op(a, b).shape();
  return {projected([op](const auto& in) { return op(in[0], in[1]); }, out, rng), {a, b}};
}

GradCase unary_case(Rng& rng, std::size_t i, std::function<Tensor(const Tensor&)> op) {
  static const std::vector<Shape> shapes = {{5}, {2, 3}, {2, 2, 3}};
  Tensor x = random_tensor(pick(shapes, i), rng);
  const Shape out = op(x).shape();
  return {projected([op](const auto& in) { return op(in[0]); }, out, rng), {x}};
}

std::vector<std::pair<std::string, CaseMaker>> primitive_cases() {
  std::vector<std::pair<std::string, CaseMaker>> cases;
  cases.emplace_back("add", [](Rng& rng, std::size_t i) { return binary_case(rng, i, ops::add); });
  cases.emplace_back("sub", [](Rng& rng, std::size_t i) { return binary_case(rng, i, ops::sub); });
  cases.emplace_back("mul", [](Rng& rng, std::size_t i) { return binary_case(rng, i, ops::mul); });
  cases.emplace_back("scale", [](Rng& rng, std::size_t i) {
    return unary_case(rng, i, [](const Tensor& x) { return ops::scale(x, -1.7); });
  });
  cases.emplace_back("matmul", [](Rng& rng, std::size_t i) {
    static const std::vector<std::pair<Shape, Shape>> shapes = {
        {{3, 4}, {4, 5}}, {{2, 3, 4}, {4, 2}}, {{2, 1, 3, 4}, {3, 4, 2}}};
    const auto& [sa, sb] = pick(shapes, i);
    Tensor a = random_tensor(sa, rng), b = random_tensor(sb, rng);
    const Shape out = ops::matmul(a, b).shape();
    return GradCase{projected([](const auto& in) { return ops::matmul(in[0], in[1]); }, out, rng), {a, b}};
  });
  cases.emplace_back("transpose", [](Rng& rng, std::size_t i) {
    static const std::vector<std::tuple<Shape, int, int>> specs = {
        {{3, 4}, 0, 1}, {{2, 3, 4}, 1, 2}, {{2, 3, 4, 2}, 0, 3}};
    const auto& [shape, a0, a1] = pick(specs, i);
    Tensor x = random_tensor(shape, rng);
    const int p = a0, q = a1;
    const Shape out = ops::transpose(x, p, q).shape();
    return GradCase{projected([p, q](const auto& in) { return ops::transpose(in[0], p, q); }, out, rng), {x}};
  });
  cases.emplace_back("reshape", [](Rng& rng, std::size_t i) {
    static const std::vector<std::pair<Shape, Shape>> specs = {
        {{3, 4}, {2, 6}}, {{2, 3, 4}, {6, 4}}, {{5}, {1, 5, 1}}};
    const auto& [from, to] = pick(specs, i);
    Tensor x = random_tensor(from, rng);
    const Shape target = to;
    return GradCase{projected([target](const auto& in) { return ops::reshape(in[0], target); }, target, rng), {x}};
  });
  cases.emplace_back("softmax", [](Rng& rng, std::size_t i) {
    if (i % 3 == 2) {
      // Causal-style mask with one fully masked row.
      Tensor x = random_tensor({2, 2, 4, 4}, rng);
      Tensor mask({1, 1, 4, 4}, 0.0);
      for (std::size_t r = 0; r < 4; ++r) {
        for (std::size_t c = 0; c < 4; ++c) {
          if (c > r || r == 3) mask.mutable_data()[r * 4 + c] = ops::kMaskDrop;
        }
      }
      return GradCase{projected([mask](const auto& in) { return ops::softmax(in[0], -1, mask); }, x.shape(), rng),
                      {x}};
    }
    static const std::vector<std::pair<Shape, int>> specs = {{{3, 5}, 1}, {{2, 3, 4}, 0}};
    const auto& [shape, axis] = pick(specs, i);
    Tensor x = random_tensor(shape, rng);
    const int ax = axis;
    return GradCase{projected([ax](const auto& in) { return ops::softmax(in[0], ax); }, shape, rng), {x}};
  });
  cases.emplace_back("rms_norm", [](Rng& rng, std::size_t i) {
    static const std::vector<Shape> shapes = {{3, 6}, {2, 3, 8}, {1, 5, 4}};
    const Shape& shape = pick(shapes, i);
    Tensor x = random_tensor(shape, rng);
    Tensor g = random_tensor({shape.back()}, rng);
    return GradCase{projected([](const auto& in) { return ops::rms_norm(in[0], in[1]); }, shape, rng), {x, g}};
  });
  cases.emplace_back("gelu", [](Rng& rng, std::size_t i) { return unary_case(rng, i, ops::gelu); });
  cases.emplace_back("embedding", [](Rng& rng, std::size_t i) {
    static const std::vector<std::pair<Shape, Shape>> specs = {{{7, 3}, {2, 3}}, {{5, 4}, {4}}, {{3, 2}, {2, 2, 2}}};
    const auto& [table_shape, id_shape] = pick(specs, i);
    Tensor table = random_tensor(table_shape, rng);
    const auto ids = random_ids(rng, shape_numel(id_shape), 0, table_shape[0]);
    Shape out = id_shape;
    out.push_back(table_shape[1]);
    const Shape ishape = id_shape;
    return GradCase{projected([ids, ishape](const auto& in) { return ops::embedding(in[0], ids, ishape); }, out, rng),
                    {table}};
  });
  cases.emplace_back("sum", [](Rng& rng, std::size_t i) {
    return unary_case(rng, i, [](const Tensor& x) { return ops::sum(x); });
  });
  cases.emplace_back("mean", [](Rng& rng, std::size_t i) {
    return unary_case(rng, i, [](const Tensor& x) { return ops::mean(x); });
  });
  cases.emplace_back("sum_axis", [](Rng& rng, std::size_t i) {
    static const std::vector<std::pair<Shape, int>> specs = {{{3, 4}, 0}, {{2, 3, 4}, 1}, {{2, 3, 4}, -1}};
    const auto& [shape, axis] = pick(specs, i);
    Tensor x = random_tensor(shape, rng);
    const int ax = axis;
    const Shape out = ops::sum_axis(x, ax).shape();
    return GradCase{projected([ax](const auto& in) { return ops::sum_axis(in[0], ax); }, out, rng), {x}};
  });
  cases.emplace_back("masked_mean", [](Rng& rng, std::size_t i) {
    static const std::vector<Shape> shapes = {{2, 4, 3}, {3, 5}, {2, 3, 2, 2}};
    const Shape& shape = pick(shapes, i);
    Tensor x = random_tensor(shape, rng);
    std::vector<std::uint8_t> keep(shape[0] * shape[1]);
    for (auto& k : keep) k = rng.uniform() < 0.6;
    for (std::size_t b = 0; b < shape[0]; ++b) keep[b * shape[1]] = 1;
    const Shape out = ops::masked_mean(x, keep).shape();
    return GradCase{projected([keep](const auto& in) { return ops::masked_mean(in[0], keep); }, out, rng), {x}};
  });
  cases.emplace_back("gather_rows", [](Rng& rng, std::size_t i) {
    static const std::vector<std::pair<Shape, std::size_t>> specs = {{{2, 5, 3}, 2}, {{1, 4, 2}, 3}, {{3, 3, 4}, 1}};
    const auto& [shape, k] = pick(specs, i);
    Tensor x = random_tensor(shape, rng);
    std::vector<std::size_t> idx(shape[0] * k);
    for (auto& v : idx) v = rng.index(shape[1]);
    const std::size_t kk = k;
    const Shape out{shape[0], k, shape[2]};
    return GradCase{projected([idx, kk](const auto& in) { return ops::gather_rows(in[0], idx, kk); }, out, rng), {x}};
  });
  cases.emplace_back("rope", [](Rng& rng, std::size_t i) {
    static const std::vector<Shape> shapes = {{2, 4, 6}, {1, 2, 5, 4}, {3, 8}};
    const Shape& shape = pick(shapes, i);
    Tensor x = random_tensor(shape, rng);
    return GradCase{projected([](const auto& in) { return ops::rope(in[0]); }, shape, rng), {x}};
  });
  cases.emplace_back("dropout", [](Rng& rng, std::size_t i) {
    const CounterKey key{rng.next(), i, 7};
    return unary_case(rng, i, [key](const Tensor& x) { return ops::dropout(x, 0.3, key, true); });
  });
  cases.emplace_back("listwise_softmax_loss", [](Rng& rng, std::size_t i) {
    static const std::vector<Shape> shapes = {{2, 4}, {3, 8}, {1, 5}};
    const Shape& shape = pick(shapes, i);
    Tensor labels(shape, 0.0);
    for (std::size_t b = 0; b < shape[0]; ++b) {
      for (std::size_t j = 0; j < shape[1]; ++j) labels.mutable_data()[b * shape[1] + j] = static_cast<double>(rng.index(3));
      labels.mutable_data()[b * shape[1] + rng.index(shape[1])] = 1.0;
    }
    Tensor scores = random_tensor(shape, rng);
    return GradCase{[labels](const auto& in) { return listwise_softmax_loss(labels, in[0]); }, {scores}};
  });
  cases.emplace_back("classification_loss", [](Rng& rng, std::size_t i) {
    static const std::vector<Shape> shapes = {{4, 3}, {2, 2}, {5, 6}};
    const Shape& shape = pick(shapes, i);
    std::vector<int> labels = random_ids(rng, shape[0], 0, shape[1]);
    Tensor logits = random_tensor(shape, rng);
    return GradCase{[labels](const auto& in) { return classification_loss(labels, in[0]); }, {logits}};
  });
  cases.emplace_back("regression_loss", [](Rng& rng, std::size_t i) {
    const std::size_t n = 2 + 3 * i;
    std::vector<double> targets(n);
    for (auto& t : targets) t = rng.uniform();
    Tensor preds = random_tensor({n}, rng);
    return GradCase{[targets](const auto& in) { return regression_loss(targets, in[0]); }, {preds}};
  });
  return cases;
}

ModelSpec tiny_spec(const std::string& pooling, TaskKind kind, std::size_t instance) {
  ModelSpec spec;
  spec.encoder.vocab_size = 12;
  spec.encoder.d_model = 8;
  spec.encoder.n_layers = 2;
  spec.encoder.n_heads = 2;
  spec.encoder.d_ff = 12;
  spec.encoder.max_len = 16;
  static const std::vector<MaskMode> masks = {MaskMode::bidirectional(), MaskMode::causal(), MaskMode::prefix(2)};
  spec.encoder.mask_mode = pick(masks, instance);
  spec.encoder.padding_side = instance % 2 == 0 ? PaddingSide::kRight : PaddingSide::kLeft;
  spec.encoder.attn_dropout = instance == 2 ? 0.1 : 0.0;
  spec.encoder.ffn_dropout = instance == 2 ? 0.1 : 0.0;
  spec.encoder.seed = 11 + instance;
  spec.pooling = parse_pooling(pooling);
  spec.task.kind = kind;
  spec.task.n_classes = pooling == "first_k:3" ? 3 : (kind == TaskKind::kClassification ? 3 : 1);
  spec.task.hidden = 6;
  return spec;
}

std::vector<std::vector<int>> random_sequences(Rng& rng, std::size_t rows, std::size_t min_len, std::size_t max_len,
                                               std::size_t vocab) {
  std::vector<std::vector<int>> seqs;
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t len = min_len + rng.index(max_len - min_len + 1);
    seqs.push_back(random_ids(rng, len, kFirstContentId, vocab));
  }
  return seqs;
}

GradCase end_to_end_case(Rng& rng, std::size_t instance, const std::string& pooling, TaskKind kind) {
  const ModelSpec spec = tiny_spec(pooling, kind, instance);
  auto model = std::make_shared<Model>(init_model(spec, rng.next()));
  const RunMode mode{true, instance};
  const auto params = model->parameters();
  if (kind == TaskKind::kRanking) {
    std::vector<RankingExample> examples(2);
    for (auto& ex : examples) {
      ex.query = random_ids(rng, 2, kFirstContentId, spec.encoder.vocab_size);
      for (std::size_t d = 0; d < 3; ++d) {
        ex.docs.push_back(random_ids(rng, 1 + rng.index(3), kFirstContentId, spec.encoder.vocab_size));
        ex.labels.push_back(d == 0 ? 1.0 : static_cast<double>(rng.index(2)));
      }
    }
    const auto batch = std::make_shared<RankingBatch>(RankingBatch::from_examples(examples, spec.encoder.padding_side));
    return GradCase{[model, batch, mode](const auto&) {
                      return listwise_softmax_loss(batch->labels, score_list(*model, *batch, mode));
                    },
                    params};
  }
  const auto seqs = random_sequences(rng, 3, 3, 6, spec.encoder.vocab_size);
  const auto batch = std::make_shared<Batch>(Batch::from_sequences(seqs, spec.encoder.padding_side));
  if (kind == TaskKind::kClassification) {
    const auto labels = random_ids(rng, seqs.size(), 0, spec.task.n_classes);
    return GradCase{[model, batch, mode, labels](const auto&) {
                      return classification_loss(labels, predict(*model, *batch, mode));
                    },
                    params};
  }
  std::vector<double> targets(seqs.size());
  for (auto& t : targets) t = rng.uniform();
  return GradCase{[model, batch, mode, targets](const auto&) {
                    return regression_loss(targets, predict(*model, *batch, mode));
                  },
                  params};
}

std::string format_error(double e) {
  std::ostringstream s;
  s.precision(3);
  s << std::scientific << e;
  return s.str();
}

CheckResult run_grad_case(const std::string& name, const CaseMaker& make, std::uint64_t seed, std::size_t instances) {
  double worst = 0.0;
  std::size_t worst_instance = 0;
  for (std::size_t i = 0; i < instances; ++i) {
    Rng rng(combine_seed(seed, fnv1a64(name) + i));
    GradCase c = make(rng, i);
    const auto r = gradient_check(c.fn, c.inputs);
    if (r.max_rel_error > worst || !std::isfinite(r.max_rel_error)) {
      worst = r.max_rel_error;
      worst_instance = i;
    }
  }
  const bool ok = std::isfinite(worst) && worst <= kGradTolerance;
  return {"grad/" + name, ok,
          "max rel err " + format_error(worst) + " over " + std::to_string(instances) + " instances" +
              (ok ? "" : " (worst instance " + std::to_string(worst_instance) + ")")};
}

}  // namespace

std::vector<CheckResult> gradient_suite(std::uint64_t seed, std::size_t instances) {
  std::vector<CheckResult> results;
  for (const auto& [name, make] : primitive_cases()) results.push_back(run_grad_case(name, make, seed, instances));

  const std::vector<std::string> poolings = {"first_k:1", "last_k:2", "mean", "attention_q:H2:V2",
                                             "attention_kv:H2:V2"};
  const std::vector<TaskKind> kinds = {TaskKind::kClassification, TaskKind::kRegression, TaskKind::kRanking};
  for (const auto& pooling : poolings) {
    for (TaskKind kind : kinds) {
      const std::string name = "model/" + pooling + "/" + to_string(kind);
      results.push_back(run_grad_case(
          name, [pooling, kind](Rng& rng, std::size_t i) { return end_to_end_case(rng, i, pooling, kind); }, seed,
          instances));
    }
  }
  results.push_back(run_grad_case(
      "model/first_k:3/per-class-head",
      [](Rng& rng, std::size_t i) { return end_to_end_case(rng, i, "first_k:3", TaskKind::kClassification); }, seed,
      instances));
  return results;
}

namespace {

EncoderConfig small_encoder(Rng& rng, MaskMode mode, PaddingSide side) {
  EncoderConfig c;
  c.vocab_size = 20;
  c.d_model = 16;
  c.n_layers = 2;
  c.n_heads = 2;
  c.d_ff = 24;
  c.max_len = 16;
  c.mask_mode = mode;
  c.padding_side = side;
  c.seed = rng.next();
  return c;
}

bool bit_equal(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::bit_cast<std::uint64_t>(a[i]) != std::bit_cast<std::uint64_t>(b[i])) return false;
  }
  return true;
}

}  // namespace

std::vector<CheckResult> masking_suite(std::uint64_t seed, std::size_t pairs) {
  std::vector<CheckResult> results;
  Rng rng(combine_seed(seed, 0x3a5c));

  std::size_t violations = 0;
  for (std::size_t t = 0; t < pairs; ++t) {
    const PaddingSide side = rng.index(2) == 0 ? PaddingSide::kRight : PaddingSide::kLeft;
    const EncoderConfig cfg = small_encoder(rng, MaskMode::causal(), side);
    const EncoderParams params = init_params(cfg, rng.next());
    const auto seqs = random_sequences(rng, 1 + rng.index(3), 2, 8, cfg.vocab_size);
    const Batch batch = Batch::from_sequences(seqs, side);
    const std::size_t row = rng.index(batch.rows);
    const std::size_t first = batch.first_real(row);
    const std::size_t cut = first + rng.index(batch.lengths[row] - 1);  // leave >= 1 future token
    Batch perturbed = batch;
    for (std::size_t p = cut + 1; p < batch.length; ++p) {
      if (!batch.is_real(row, p)) continue;
      int& id = perturbed.token_ids[row * batch.length + p];
      id = kFirstContentId + (id - kFirstContentId + 1 + static_cast<int>(rng.index(cfg.vocab_size - kFirstContentId - 1))) %
                                 static_cast<int>(cfg.vocab_size - kFirstContentId);
    }
    const RunMode mode{false, 0};
    const Tensor a = forward(cfg, params, batch, mode).activations;
    const Tensor b = forward(cfg, params, perturbed, mode).activations;
    const std::size_t d = cfg.d_model;
    for (std::size_t p = first; p <= cut; ++p) {
      const std::size_t off = (row * batch.length + p) * d;
      if (!bit_equal(a.data().subspan(off, d), b.data().subspan(off, d))) {
        ++violations;
        break;
      }
    }
  }
  results.push_back({"mask/causality", violations == 0,
                     std::to_string(violations) + " violations in " + std::to_string(pairs) + " perturbations"});

  std::size_t prefix_full_bad = 0, prefix_zero_bad = 0, row_sum_bad = 0;
  double worst_row = 0.0;
  for (std::size_t t = 0; t < 20; ++t) {
    const PaddingSide side = t % 2 == 0 ? PaddingSide::kRight : PaddingSide::kLeft;
    EncoderConfig cfg = small_encoder(rng, MaskMode::bidirectional(), side);
    const EncoderParams params = init_params(cfg, rng.next());
    const Batch batch = Batch::from_sequences(random_sequences(rng, 3, 1, 8, cfg.vocab_size), side);
    const RunMode mode{false, 0};
    AttentionTrace trace;
    const Tensor bidi = forward(cfg, params, batch, mode, &trace).activations;
    cfg.mask_mode = MaskMode::prefix(batch.length);
    const Tensor full = forward(cfg, params, batch, mode).activations;
    cfg.mask_mode = MaskMode::causal();
    const Tensor causal = forward(cfg, params, batch, mode).activations;
    cfg.mask_mode = MaskMode::prefix(0);
    const Tensor zero = forward(cfg, params, batch, mode).activations;
    prefix_full_bad += !bit_equal(bidi.data(), full.data());
    prefix_zero_bad += !bit_equal(causal.data(), zero.data());

    for (const Tensor& probs : trace.probabilities) {
      const std::size_t L = batch.length;
      const std::size_t heads = probs.shape()[1];
      for (std::size_t b = 0; b < batch.rows; ++b) {
        for (std::size_t h = 0; h < heads; ++h) {
          for (std::size_t i = 0; i < L; ++i) {
            if (!batch.is_real(b, i)) continue;
            double s = 0.0;
            for (std::size_t j = 0; j < L; ++j) s += probs[((b * heads + h) * L + i) * L + j];
            worst_row = std::max(worst_row, std::abs(s - 1.0));
          }
        }
      }
    }
  }
  row_sum_bad = worst_row > 1e-12;
  results.push_back({"mask/prefix_full_is_bidirectional", prefix_full_bad == 0,
                     std::to_string(prefix_full_bad) + " mismatching batches of 20"});
  results.push_back({"mask/prefix_zero_is_causal", prefix_zero_bad == 0,
                     std::to_string(prefix_zero_bad) + " mismatching batches of 20"});
  results.push_back({"mask/attention_rows_sum_to_one", row_sum_bad == 0, "max |row sum - 1| " + format_error(worst_row)});
  return results;
}

std::vector<CheckResult> pad_invariance_suite(std::uint64_t seed) {
  std::vector<CheckResult> results;
  Rng rng(combine_seed(seed, 0x9ad));
  const std::vector<MaskMode> masks = {MaskMode::causal(), MaskMode::bidirectional(), MaskMode::prefix(3)};
  const std::vector<std::string> poolings = {"first_k:1", "first_k:2", "last_k:1",         "last_k:2",
                                             "mean",      "attention_q:H2:V2", "attention_kv:H2:V2"};
  for (const MaskMode& mask : masks) {
    for (const auto& pooling : poolings) {
      for (PaddingSide side : {PaddingSide::kLeft, PaddingSide::kRight}) {
        ModelSpec spec;
        spec.encoder = small_encoder(rng, mask, side);
        spec.pooling = parse_pooling(pooling);
        spec.task.kind = TaskKind::kClassification;
        spec.task.n_classes = 3;
        const Model model = init_model(spec, rng.next());
        std::size_t changed = 0;
        for (std::size_t t = 0; t < 5; ++t) {
          const Batch batch = Batch::from_sequences(random_sequences(rng, 4, 2, 9, spec.encoder.vocab_size), side);
          Batch mutated = batch;
          for (std::size_t k = 0; k < batch.token_ids.size(); ++k) {
            if (batch.pad_mask[k] == 0) mutated.token_ids[k] = static_cast<int>(rng.index(spec.encoder.vocab_size));
          }
          const RunMode mode{false, 0};
          changed += !bit_equal(predict(model, batch, mode).data(), predict(model, mutated, mode).data());
        }
        results.push_back({"pad/" + mask.to_string() + "/" + pooling + "/" + to_string(side), changed == 0,
                           std::to_string(changed) + " of 5 batches changed"});
      }
    }
  }
  return results;
}

std::vector<CheckResult> oracle_suite(std::uint64_t seed, std::size_t instances) {
  std::vector<CheckResult> results;
  Rng rng(combine_seed(seed, 0x0ac1e));
  double loss_err = 0, f1_err = 0, mcc_err = 0, sp_err = 0, mrr_err = 0, ndcg_err = 0;

  for (std::size_t t = 0; t < instances; ++t) {
    // listwise loss
    const std::size_t lists = 1 + rng.index(3), m = 2 + rng.index(5);
    std::vector<std::vector<double>> ys(lists, std::vector<double>(m)), ss(lists, std::vector<double>(m));
    Tensor labels({lists, m}), scores({lists, m});
    for (std::size_t b = 0; b < lists; ++b) {
      for (std::size_t j = 0; j < m; ++j) {
        ys[b][j] = static_cast<double>(rng.index(3));
        ss[b][j] = 3.0 * rng.normal();
      }
      ys[b][rng.index(m)] = 1.0 + static_cast<double>(rng.index(2));
      std::copy(ys[b].begin(), ys[b].end(), labels.mutable_data().begin() + static_cast<std::ptrdiff_t>(b * m));
      std::copy(ss[b].begin(), ss[b].end(), scores.mutable_data().begin() + static_cast<std::ptrdiff_t>(b * m));
    }
    loss_err = std::max(loss_err, std::abs(listwise_softmax_loss(labels, scores).item() - naive_listwise_softmax(ys, ss)));

    // binary classification metrics
    const std::size_t n = 1 + rng.index(12);
    std::vector<int> preds(n), truth(n);
    for (std::size_t i = 0; i < n; ++i) {
      preds[i] = static_cast<int>(rng.index(2));
      truth[i] = static_cast<int>(rng.index(2));
    }
    f1_err = std::max(f1_err, std::abs(f1_binary(preds, truth) - naive_f1(preds, truth)));
    mcc_err = std::max(mcc_err, std::abs(matthews_corr(preds, truth) - naive_matthews(preds, truth)));

    // spearman, with ties from a small value range
    const std::size_t k = 2 + rng.index(10);
    std::vector<double> x(k), y(k);
    for (std::size_t i = 0; i < k; ++i) {
      x[i] = static_cast<double>(rng.index(5));
      y[i] = rng.index(3) == 0 ? static_cast<double>(rng.index(4)) : rng.normal();
    }
    sp_err = std::max(sp_err, std::abs(spearman_corr(x, y) - naive_spearman(x, y)));

    // ranking metrics, tied scores included
    const std::size_t docs = 1 + rng.index(7);
    const std::size_t cutoff = 1 + rng.index(8);
    std::vector<double> rs(docs), rl(docs);
    for (std::size_t i = 0; i < docs; ++i) {
      rs[i] = static_cast<double>(rng.index(4));
      rl[i] = static_cast<double>(rng.index(3));
    }
    const auto ranked = rank_by_scores(rs, rl);
    mrr_err = std::max(mrr_err, std::abs(reciprocal_rank_at_k(ranked, cutoff) - naive_reciprocal_rank(rs, rl, cutoff)));
    const auto nd = ndcg_at_k(ranked, cutoff);
    const auto nd_ref = naive_ndcg(rs, rl, cutoff);
    if (nd.has_value() != nd_ref.has_value()) ndcg_err = INFINITY;
    else if (nd) ndcg_err = std::max(ndcg_err, std::abs(*nd - *nd_ref));
  }
  const std::string suffix = " on " + std::to_string(instances) + " instances";
  auto add = [&](const std::string& name, double err) {
    results.push_back({"oracle/" + name, err <= 1e-12, "max abs err " + format_error(err) + suffix});
  };
  add("listwise_softmax", loss_err);
  add("f1", f1_err);
  add("matthews", mcc_err);
  add("spearman", sp_err);
  add("mrr@k", mrr_err);
  add("ndcg@k", ndcg_err);

  // Closed forms.
  const double uniform = listwise_softmax_loss(Tensor({1, 4}, {1, 0, 0, 0}), Tensor({1, 4}, 0.0)).item();
  results.push_back({"closed/uniform_listwise_is_ln4", std::abs(uniform - std::log(4.0)) <= 1e-9,
                     "loss " + format_double(uniform)});
  const std::vector<double> second = {0.0, 1.0, 0.0};
  const double nd2 = ndcg_at_k(second, 10).value_or(-1.0);
  results.push_back({"closed/ndcg_second_position", std::abs(nd2 - 1.0 / std::log2(3.0)) <= 1e-9,
                     "ndcg " + format_double(nd2)});
  const std::vector<double> third = {0.0, 0.0, 1.0};
  const bool mrr_ok = std::abs(reciprocal_rank_at_k(third, 2)) <= 1e-9 &&
                      std::abs(reciprocal_rank_at_k(third, 3) - 1.0 / 3.0) <= 1e-9 &&
                      std::abs(reciprocal_rank_at_k(second, 1)) <= 1e-9 &&
                      std::abs(reciprocal_rank_at_k(second, 2) - 0.5) <= 1e-9;
  results.push_back({"closed/mrr_cutoffs", mrr_ok, "rank 3 at k=2,3 and rank 2 at k=1,2"});
  return results;
}

bool all_passed(const std::vector<CheckResult>& results) {
  for (const auto& r : results) {
    if (!r.passed) return false;
  }
  return true;
}

int run_selftest(std::ostream& out, std::uint64_t seed) {
  int failures = 0;
  for (const auto& suite : {gradient_suite(seed), masking_suite(seed), pad_invariance_suite(seed), oracle_suite(seed)}) {
    for (const auto& r : suite) {
      out << (r.passed ? "ok   " : "FAIL ") << r.name << "  " << r.detail << '\n';
      failures += !r.passed;
    }
  }
  out << (failures == 0 ? "selftest passed" : "selftest FAILED: " + std::to_string(failures) + " checks") << '\n';
  return failures;
}

}  // namespace dec2enc::check
