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

#include <algorithm>

#include "dec2enc/check/gradcheck.hpp"
#include "dec2enc/config_io.hpp"
#include "dec2enc/ops.hpp"
#include "dec2enc/pooling.hpp"

namespace dec2enc {
namespace {

// Hidden states whose value at (row, pos, d) is 100*row + 10*pos + d.
HiddenStates indexed_hidden(const std::vector<std::size_t>& lengths, std::size_t L, std::size_t D, PaddingSide side) {
  HiddenStates h;
  h.rows = lengths.size();
  h.length = L;
  std::vector<double> v(h.rows * L * D);
  for (std::size_t r = 0; r < h.rows; ++r) {
    for (std::size_t p = 0; p < L; ++p) {
      for (std::size_t d = 0; d < D; ++d) v[(r * L + p) * D + d] = 100.0 * r + 10.0 * p + d;
      const std::size_t start = side == PaddingSide::kLeft ? L - lengths[r] : 0;
      h.pad_mask.push_back(p >= start && p < start + lengths[r]);
    }
  }
  h.activations = Tensor({h.rows, L, D}, std::move(v));
  return h;
}

std::vector<double> row_vec(const Tensor& pooled, std::size_t row, std::size_t slot) {
  const std::size_t A = pooled.shape()[1], D = pooled.shape()[2];
  const auto s = pooled.data().subspan((row * A + slot) * D, D);
  return {s.begin(), s.end()};
}

std::vector<double> hidden_at(std::size_t row, std::size_t pos, std::size_t D) {
  std::vector<double> v(D);
  for (std::size_t d = 0; d < D; ++d) v[d] = 100.0 * row + 10.0 * pos + d;
  return v;
}

TEST(Pool, MeanOfTwoRealTokens) {
  HiddenStates h;
  h.rows = 1;
  h.length = 2;
  h.pad_mask = {1, 1};
  h.activations = Tensor({1, 2, 2}, {1, 2, 3, 4});
  const Tensor out = pool(PoolingSpec{MeanPool{}}, PoolerParams{}, h);
  EXPECT_EQ(out.shape(), (Shape{1, 1, 2}));
  EXPECT_DOUBLE_EQ(out[0], 2.0);
  EXPECT_DOUBLE_EQ(out[1], 3.0);
}

TEST(Pool, LastKSkipsRightPads) {
  const HiddenStates h = indexed_hidden({3}, 5, 2, PaddingSide::kRight);
  EXPECT_EQ(row_vec(pool(PoolingSpec{LastK{1}}, {}, h), 0, 0), hidden_at(0, 2, 2));
}

TEST(Pool, FirstKSkipsLeftPads) {
  const HiddenStates h = indexed_hidden({3}, 5, 2, PaddingSide::kLeft);
  const Tensor out = pool(PoolingSpec{FirstK{2}}, {}, h);
  EXPECT_EQ(row_vec(out, 0, 0), hidden_at(0, 2, 2));
  EXPECT_EQ(row_vec(out, 0, 1), hidden_at(0, 3, 2));
}

TEST(Pool, LiteralModeTakesArrayPositions) {
  const HiddenStates h = indexed_hidden({3}, 5, 2, PaddingSide::kLeft);
  EXPECT_EQ(row_vec(pool(PoolingSpec{FirstK{1, false}}, {}, h), 0, 0), hidden_at(0, 0, 2));
  const HiddenStates r = indexed_hidden({3}, 5, 2, PaddingSide::kRight);
  EXPECT_EQ(row_vec(pool(PoolingSpec{LastK{1, false}}, {}, r), 0, 0), hidden_at(0, 4, 2));
}

TEST(Pool, KExceedingShortestRowIsAnError) {
  const HiddenStates h = indexed_hidden({4, 2}, 4, 2, PaddingSide::kRight);
  EXPECT_THROW(pool(PoolingSpec{FirstK{3}}, {}, h), std::invalid_argument);
  EXPECT_THROW(pool(PoolingSpec{LastK{3}}, {}, h), std::invalid_argument);
}

TEST(Pool, QueryProbeWithZeroQueryIsMeanOfValues) {
  const std::size_t D = 4;
  const HiddenStates h = indexed_hidden({3, 2}, 3, D, PaddingSide::kRight);
  const PoolingSpec spec{AttentionPool{ProbeVariant::kQueryProbe, 2, 1}};
  PoolerParams p = init_pooler(spec, D, 3);
  std::fill(p.latents.mutable_data().begin(), p.latents.mutable_data().begin() + D, 0.0);  // latent 0 = zero
  // Identity value and output projections expose the raw mean.
  for (Tensor* w : {&p.wv, &p.wo}) {
    auto data = w->mutable_data();
    std::fill(data.begin(), data.end(), 0.0);
    for (std::size_t i = 0; i < D; ++i) data[i * D + i] = 1.0;
  }
  const Tensor out = pool(spec, p, h);
  for (std::size_t r = 0; r < 2; ++r) {
    const std::size_t n = r == 0 ? 3 : 2;
    for (std::size_t d = 0; d < D; ++d) {
      double mean = 0;
      for (std::size_t pos = 0; pos < n; ++pos) mean += hidden_at(r, pos, D)[d];
      EXPECT_NEAR(row_vec(out, r, 0)[d], mean / static_cast<double>(n), 1e-12);
    }
  }
}

TEST(Pool, ArityContract) {
  Rng rng(6);
  const std::vector<std::string> specs = {"first_k:3", "last_k:2", "mean", "attention_q:H2:V5", "attention_kv:H4:V3"};
  for (const auto& label : specs) {
    const PoolingSpec spec = parse_pooling(label);
    EXPECT_EQ(spec.label(), label);
    const PoolerParams p = init_pooler(spec, 8, 1);
    for (std::size_t rows : {1u, 3u}) {
      for (std::size_t L : {3u, 6u}) {
        std::vector<std::size_t> lengths(rows);
        for (auto& n : lengths) n = 3 + rng.index(L - 2);
        const Tensor out = pool(spec, p, indexed_hidden(lengths, L, 8, PaddingSide::kRight));
        EXPECT_EQ(out.shape(), (Shape{rows, spec.arity(), 8})) << label;
      }
    }
  }
}

TEST(Pool, SpecValidation) {
  EXPECT_THROW(PoolingSpec{FirstK{0}}.validate(8), std::invalid_argument);
  EXPECT_THROW((PoolingSpec{AttentionPool{ProbeVariant::kKVProbe, 0, 1}}.validate(8)), std::invalid_argument);
  EXPECT_THROW((PoolingSpec{AttentionPool{ProbeVariant::kKVProbe, 2, 3}}.validate(8)), std::invalid_argument);
  EXPECT_THROW(parse_pooling("median"), std::invalid_argument);
  EXPECT_THROW(parse_pooling("first_k:two"), std::invalid_argument);
  EXPECT_EQ(parse_pooling("first_k:2:literal").label(), "first_k:2:literal");
}

TEST(Pool, MeanIsPermutationEquivariant) {
  Rng rng(10);
  HiddenStates h = indexed_hidden({4}, 5, 3, PaddingSide::kRight);
  h.activations = check::random_constant({1, 5, 3}, rng);
  const Tensor a = pool(PoolingSpec{MeanPool{}}, {}, h);
  HiddenStates permuted = h;
  std::vector<double> v(h.activations.data().begin(), h.activations.data().end());
  const std::vector<std::size_t> perm = {2, 0, 3, 1};
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t d = 0; d < 3; ++d) v[i * 3 + d] = h.activations[perm[i] * 3 + d];
  }
  permuted.activations = Tensor({1, 5, 3}, v);
  const Tensor b = pool(PoolingSpec{MeanPool{}}, {}, permuted);
  for (std::size_t d = 0; d < 3; ++d) EXPECT_NEAR(a[d], b[d], 1e-15);
}

TEST(Pool, GradientFlowsOnlyToRealPositions) {
  Rng rng(21);
  const std::vector<std::string> specs = {"first_k:1", "last_k:2", "mean", "attention_q:H2:V2", "attention_kv:H2:V2",
                                          "first_k:1:literal"};
  for (const auto& label : specs) {
    for (PaddingSide side : {PaddingSide::kLeft, PaddingSide::kRight}) {
      const PoolingSpec spec = parse_pooling(label);
      const PoolerParams p = init_pooler(spec, 4, 2);
      HiddenStates h = indexed_hidden({3, 5}, 5, 4, side);
      h.activations = check::random_tensor({2, 5, 4}, rng);
      const Tensor dir = check::random_constant({2, spec.arity(), 4}, rng);
      Tape tape;
      {
        TapeScope scope(tape);
        tape.backward(ops::sum(ops::mul(pool(spec, p, h), dir)));
      }
      const auto g = h.activations.grad();
      bool any_real = false;
      for (std::size_t r = 0; r < 2; ++r) {
        for (std::size_t pos = 0; pos < 5; ++pos) {
          double norm = 0;
          for (std::size_t d = 0; d < 4; ++d) norm += std::abs(g[(r * 5 + pos) * 4 + d]);
          if (h.pad_mask[r * 5 + pos]) any_real |= norm > 0;
          else if (spec.label().find("literal") == std::string::npos) EXPECT_EQ(norm, 0.0) << label;
        }
      }
      EXPECT_TRUE(any_real) << label;
    }
  }
}

TEST(Pool, SingleTokenRowsArePaddingSideInvariantUnderBidirectional) {
  // One real token sits at absolute position 0 (right pad) or L-1 (left
  // pad); with a single key, RoPE phases cancel in attention.
  EncoderConfig c;
  c.vocab_size = 20;
  c.d_model = 8;
  c.n_heads = 2;
  c.d_ff = 16;
  c.n_layers = 2;
  const EncoderParams params = init_params(c, 4);
  for (const std::string label : {"mean", "attention_q:H2:V2", "attention_kv:H2:V3"}) {
    const PoolingSpec spec = parse_pooling(label);
    const PoolerParams p = init_pooler(spec, c.d_model, 5);
    const std::vector<std::vector<int>> seqs = {{7}, {9}, {4}};
    std::vector<Tensor> outs;
    for (PaddingSide side : {PaddingSide::kLeft, PaddingSide::kRight}) {
      c.padding_side = side;
      const Batch b = Batch::from_sequences(seqs, side, 4);
      outs.push_back(pool(spec, p, forward(c, params, b, RunMode{})));
    }
    for (std::size_t i = 0; i < outs[0].numel(); ++i) EXPECT_NEAR(outs[0][i], outs[1][i], 1e-9) << label;
  }
}

}  // namespace
}  // namespace dec2enc
