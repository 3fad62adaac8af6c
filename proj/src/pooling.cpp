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

#include "dec2enc/pooling.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dec2enc/ops.hpp"
#include "dec2enc/rng.hpp"

namespace dec2enc {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

Tensor random_matrix(std::size_t rows, std::size_t cols, std::size_t fan_in, std::uint64_t seed) {
  Rng rng(seed);
  const double stddev = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::vector<double> v(rows * cols);
  for (double& x : v) x = rng.normal() * stddev;
  Tensor t(Shape{rows, cols}, std::move(v));
  t.set_requires_grad(true);
  return t;
}

std::vector<std::size_t> token_positions(const HiddenStates& hidden, std::size_t k, bool from_end,
                                         bool skip_pads) {
  const std::size_t len = hidden.length;
  std::vector<std::size_t> index;
  index.reserve(hidden.rows * k);
  for (std::size_t r = 0; r < hidden.rows; ++r) {
    std::vector<std::size_t> candidates;
    for (std::size_t p = 0; p < len; ++p) {
      if (!skip_pads || hidden.pad_mask[r * len + p]) candidates.push_back(p);
    }
    if (candidates.size() < k) {
      throw std::invalid_argument("pool: k=" + std::to_string(k) + " exceeds the " +
                                  std::to_string(candidates.size()) + " tokens of row " +
                                  std::to_string(r));
    }
    const std::size_t start = from_end ? candidates.size() - k : 0;
    for (std::size_t j = 0; j < k; ++j) index.push_back(candidates[start + j]);
  }
  return index;
}

Tensor attention_pool(const AttentionPool& spec, const PoolerParams& params, const HiddenStates& hidden) {
  const Tensor& x = hidden.activations;
  const std::size_t b = hidden.rows;
  const std::size_t len = hidden.length;
  const std::size_t d = x.shape()[2];
  const std::size_t heads = spec.heads;
  const std::size_t hd = d / heads;
  const std::size_t v = spec.latents;
  const double inv_sqrt_hd = 1.0 / std::sqrt(static_cast<double>(hd));

  if (spec.variant == ProbeVariant::kQueryProbe) {
    // Learned queries attend over the real tokens.
    const Tensor q = ops::transpose(ops::reshape(ops::matmul(params.latents, params.wq), Shape{v, heads, hd}), 0, 1);
    const Tensor k = ops::transpose(ops::reshape(ops::matmul(x, params.wk), Shape{b, len, heads, hd}), 1, 2);
    const Tensor val = ops::transpose(ops::reshape(ops::matmul(x, params.wv), Shape{b, len, heads, hd}), 1, 2);
    std::vector<double> mask(b * len, ops::kMaskDrop);
    for (std::size_t i = 0; i < b * len; ++i) {
      if (hidden.pad_mask[i]) mask[i] = 0.0;
    }
    const Tensor key_mask(Shape{b, 1, 1, len}, std::move(mask));
    const Tensor scores = ops::scale(ops::matmul(q, ops::transpose(k, 2, 3)), inv_sqrt_hd);  // [B,H,V,L]
    const Tensor probs = ops::softmax(scores, 3, key_mask);
    const Tensor out = ops::matmul(probs, val);  // [B,H,V,hd]
    return ops::matmul(ops::reshape(ops::transpose(out, 1, 2), Shape{b, v, d}), params.wo);
  }

  // KV probe: tokens query the learned latents. The per-token output
  // sum_v p[l,v] * value_v is split by latent and averaged over real tokens,
  // giving one vector per latent.
  const Tensor q = ops::transpose(ops::reshape(ops::matmul(x, params.wq), Shape{b, len, heads, hd}), 1, 2);
  const Tensor k = ops::transpose(ops::reshape(ops::matmul(params.latents, params.wk), Shape{v, heads, hd}), 0, 1);
  const Tensor val = ops::transpose(ops::reshape(ops::matmul(params.latents, params.wv), Shape{v, heads, hd}), 0, 1);
  const Tensor scores = ops::scale(ops::matmul(q, ops::transpose(k, 1, 2)), inv_sqrt_hd);  // [B,H,L,V]
  const Tensor probs = ops::softmax(scores, 3);
  const Tensor weight = ops::masked_mean(ops::transpose(probs, 1, 2), hidden.pad_mask);  // [B,H,V]
  const Tensor out = ops::mul(ops::reshape(weight, Shape{b, heads, v, 1}), val);  // [B,H,V,hd]
  return ops::matmul(ops::reshape(ops::transpose(out, 1, 2), Shape{b, v, d}), params.wo);
}

}  // namespace

std::size_t PoolingSpec::arity() const {
  return std::visit(Overloaded{[](const FirstK& s) { return s.k; }, [](const LastK& s) { return s.k; },
                               [](const MeanPool&) { return std::size_t{1}; },
                               [](const AttentionPool& s) { return s.latents; }},
                    kind);
}

std::string PoolingSpec::label() const {
  return std::visit(
      Overloaded{[](const FirstK& s) {
                   return "first_k:" + std::to_string(s.k) + (s.skip_pads ? "" : ":literal");
                 },
                 [](const LastK& s) {
                   return "last_k:" + std::to_string(s.k) + (s.skip_pads ? "" : ":literal");
                 },
                 [](const MeanPool&) { return std::string("mean"); },
                 [](const AttentionPool& s) {
                   return std::string(s.variant == ProbeVariant::kQueryProbe ? "attention_q" : "attention_kv") +
                          ":H" + std::to_string(s.heads) + ":V" + std::to_string(s.latents);
                 }},
      kind);
}

void PoolingSpec::validate(std::size_t d_model) const {
  std::visit(Overloaded{[](const FirstK& s) {
                          if (s.k == 0) throw std::invalid_argument("PoolingSpec: k must be >= 1");
                        },
                        [](const LastK& s) {
                          if (s.k == 0) throw std::invalid_argument("PoolingSpec: k must be >= 1");
                        },
                        [](const MeanPool&) {},
                        [d_model](const AttentionPool& s) {
                          if (s.latents == 0) throw std::invalid_argument("PoolingSpec: latents must be >= 1");
                          if (s.heads == 0 || d_model % s.heads != 0) {
                            throw std::invalid_argument("PoolingSpec: heads must divide d_model");
                          }
                        }},
             kind);
}

std::vector<std::pair<std::string, Tensor>> PoolerParams::named() const {
  std::vector<std::pair<std::string, Tensor>> out;
  if (!latents.defined()) return out;
  out.emplace_back("pooler.latents", latents);
  out.emplace_back("pooler.wq", wq);
  out.emplace_back("pooler.wk", wk);
  out.emplace_back("pooler.wv", wv);
  out.emplace_back("pooler.wo", wo);
  return out;
}

PoolerParams init_pooler(const PoolingSpec& spec, std::size_t d_model, std::uint64_t seed) {
  spec.validate(d_model);
  PoolerParams p;
  const auto* attn = std::get_if<AttentionPool>(&spec.kind);
  if (attn == nullptr) return p;
  const std::uint64_t base = combine_seed(seed, 0x9001);
  p.latents = random_matrix(attn->latents, d_model, 1, combine_seed(base, 1));
  p.wq = random_matrix(d_model, d_model, d_model, combine_seed(base, 2));
  p.wk = random_matrix(d_model, d_model, d_model, combine_seed(base, 3));
  p.wv = random_matrix(d_model, d_model, d_model, combine_seed(base, 4));
  p.wo = random_matrix(d_model, d_model, d_model, combine_seed(base, 5));
  return p;
}

Tensor pool(const PoolingSpec& spec, const PoolerParams& params, const HiddenStates& hidden) {
  const Tensor& x = hidden.activations;
  if (x.dim() != 3 || x.shape()[0] != hidden.rows || x.shape()[1] != hidden.length ||
      hidden.pad_mask.size() != hidden.rows * hidden.length) {
    throw ShapeError("pool: hidden states " + shape_to_string(x.shape()) + " inconsistent with pad mask");
  }
  spec.validate(x.shape()[2]);
  return std::visit(
      Overloaded{[&](const FirstK& s) {
                   return ops::gather_rows(x, token_positions(hidden, s.k, false, s.skip_pads), s.k);
                 },
                 [&](const LastK& s) {
                   return ops::gather_rows(x, token_positions(hidden, s.k, true, s.skip_pads), s.k);
                 },
                 [&](const MeanPool&) {
                   return ops::reshape(ops::masked_mean(x, hidden.pad_mask), Shape{hidden.rows, 1, x.shape()[2]});
                 },
                 [&](const AttentionPool& s) {
                   if (!params.latents.defined() || params.latents.shape()[0] != s.latents) {
                     throw std::invalid_argument("pool: attention pooler parameters do not match spec");
                   }
                   return attention_pool(s, params, hidden);
                 }},
      spec.kind);
}

}  // namespace dec2enc
