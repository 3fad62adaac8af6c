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

#include "dec2enc/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dec2enc/ops.hpp"
#include "dec2enc/rng.hpp"

namespace dec2enc {

MaskMode MaskMode::parse(const std::string& text) {
  if (text == "causal") return causal();
  if (text == "bidirectional" || text == "bidi") return bidirectional();
  if (text.rfind("prefix:", 0) == 0) {
    const std::string num = text.substr(7);
    if (num.empty() || num.find_first_not_of("0123456789") != std::string::npos) {
      throw std::invalid_argument("bad prefix length in mask mode '" + text + "'");
    }
    return prefix(std::stoul(num));
  }
  throw std::invalid_argument("unknown mask mode '" + text + "'");
}

std::string MaskMode::to_string() const {
  switch (kind) {
    case MaskKind::kCausal: return "causal";
    case MaskKind::kBidirectional: return "bidirectional";
    case MaskKind::kPrefix: return "prefix:" + std::to_string(prefix_len);
  }
  return "";
}

PaddingSide parse_padding_side(const std::string& text) {
  if (text == "left") return PaddingSide::kLeft;
  if (text == "right") return PaddingSide::kRight;
  throw std::invalid_argument("unknown padding side '" + text + "'");
}

std::string to_string(PaddingSide side) { return side == PaddingSide::kLeft ? "left" : "right"; }

void EncoderConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("EncoderConfig: " + msg); };
  if (vocab_size == 0 || d_model == 0 || n_layers == 0 || n_heads == 0 || d_ff == 0 || max_len == 0) {
    fail("all sizes must be positive");
  }
  if (d_model % n_heads != 0) fail("d_model must be divisible by n_heads");
  if (head_dim() % 2 != 0) fail("head_dim must be even for rotary embeddings");
  if (mask_mode.kind == MaskKind::kPrefix && mask_mode.prefix_len > max_len) {
    fail("prefix_len exceeds max_len");
  }
  if (!(attn_dropout >= 0.0 && attn_dropout < 1.0)) fail("attn_dropout outside [0, 1)");
  if (!(ffn_dropout >= 0.0 && ffn_dropout < 1.0)) fail("ffn_dropout outside [0, 1)");
}

Batch Batch::from_sequences(const std::vector<std::vector<int>>& sequences, PaddingSide side,
                            std::size_t pad_to, int pad_id) {
  if (sequences.empty()) throw std::invalid_argument("Batch: no sequences");
  std::size_t longest = 0;
  for (const auto& s : sequences) {
    if (s.empty()) throw std::invalid_argument("Batch: empty sequence");
    longest = std::max(longest, s.size());
  }
  const std::size_t length = pad_to == 0 ? longest : pad_to;
  if (length < longest) {
    throw std::invalid_argument("Batch: sequence of length " + std::to_string(longest) +
                                " does not fit pad_to=" + std::to_string(length));
  }
  Batch b;
  b.rows = sequences.size();
  b.length = length;
  b.token_ids.assign(b.rows * length, pad_id);
  b.pad_mask.assign(b.rows * length, 0);
  for (std::size_t r = 0; r < b.rows; ++r) {
    const auto& s = sequences[r];
    const std::size_t offset = side == PaddingSide::kLeft ? length - s.size() : 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      b.token_ids[r * length + offset + i] = s[i];
      b.pad_mask[r * length + offset + i] = 1;
    }
    b.lengths.push_back(s.size());
  }
  return b;
}

std::size_t Batch::first_real(std::size_t row) const {
  for (std::size_t p = 0; p < length; ++p) {
    if (is_real(row, p)) return p;
  }
  throw std::invalid_argument("Batch: row " + std::to_string(row) + " has no real tokens");
}

void Batch::validate(std::size_t vocab_size, PaddingSide side) const {
  if (rows == 0 || length == 0 || token_ids.size() != rows * length ||
      pad_mask.size() != rows * length || lengths.size() != rows) {
    throw std::invalid_argument("Batch: inconsistent dimensions");
  }
  for (int id : token_ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab_size) {
      throw std::invalid_argument("Batch: token id " + std::to_string(id) + " outside vocabulary");
    }
  }
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t n = lengths[r];
    if (n == 0 || n > length) throw std::invalid_argument("Batch: row " + std::to_string(r) + " has bad length");
    const std::size_t start = side == PaddingSide::kLeft ? length - n : 0;
    for (std::size_t p = 0; p < length; ++p) {
      const bool expect_real = p >= start && p < start + n;
      if (is_real(r, p) != expect_real) {
        throw std::invalid_argument("Batch: row " + std::to_string(r) + " is not " +
                                    to_string(side) + "-padded");
      }
    }
  }
}

std::vector<std::pair<std::string, Tensor>> EncoderParams::named() const {
  std::vector<std::pair<std::string, Tensor>> out;
  out.emplace_back("encoder.embed", embed);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const std::string p = "encoder.layers." + std::to_string(i) + ".";
    const auto& l = layers[i];
    out.emplace_back(p + "attn_norm", l.attn_norm);
    out.emplace_back(p + "wq", l.wq);
    out.emplace_back(p + "wk", l.wk);
    out.emplace_back(p + "wv", l.wv);
    out.emplace_back(p + "wo", l.wo);
    out.emplace_back(p + "ffn_norm", l.ffn_norm);
    out.emplace_back(p + "w_gate", l.w_gate);
    out.emplace_back(p + "w_up", l.w_up);
    out.emplace_back(p + "w_down", l.w_down);
  }
  out.emplace_back("encoder.final_norm", final_norm);
  return out;
}

namespace {

Tensor random_matrix(std::size_t rows, std::size_t cols, std::size_t fan_in, Rng& rng) {
  const double stddev = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::vector<double> v(rows * cols);
  for (double& x : v) x = rng.normal() * stddev;
  Tensor t(Shape{rows, cols}, std::move(v));
  t.set_requires_grad(true);
  return t;
}

Tensor ones(std::size_t n) {
  Tensor t(Shape{n}, 1.0);
  t.set_requires_grad(true);
  return t;
}

}  // namespace

EncoderParams init_params(const EncoderConfig& config, std::uint64_t seed) {
  config.validate();
  const std::size_t d = config.d_model;
  const std::size_t f = config.d_ff;
  std::uint64_t stream = 0;
  auto next_rng = [&] { return Rng(combine_seed(seed, ++stream)); };

  EncoderParams p;
  {
    Rng rng = next_rng();
    p.embed = random_matrix(config.vocab_size, d, 1, rng);
  }
  for (std::size_t i = 0; i < config.n_layers; ++i) {
    LayerParams l;
    l.attn_norm = ones(d);
    Rng rq = next_rng();
    l.wq = random_matrix(d, d, d, rq);
    Rng rk = next_rng();
    l.wk = random_matrix(d, d, d, rk);
    Rng rv = next_rng();
    l.wv = random_matrix(d, d, d, rv);
    Rng ro = next_rng();
    l.wo = random_matrix(d, d, d, ro);
    l.ffn_norm = ones(d);
    Rng rg = next_rng();
    l.w_gate = random_matrix(d, f, d, rg);
    Rng ru = next_rng();
    l.w_up = random_matrix(d, f, d, ru);
    Rng rd = next_rng();
    l.w_down = random_matrix(f, d, f, rd);
    p.layers.push_back(std::move(l));
  }
  p.final_norm = ones(d);
  return p;
}

Tensor build_attention_mask(const Batch& batch, const MaskMode& mode) {
  const std::size_t b = batch.rows;
  const std::size_t len = batch.length;
  std::vector<double> mask(b * len * len, ops::kMaskDrop);
  for (std::size_t r = 0; r < b; ++r) {
    for (std::size_t q = 0; q < len; ++q) {
      for (std::size_t k = 0; k < len; ++k) {
        if (!batch.is_real(r, k)) continue;
        bool admit = true;
        switch (mode.kind) {
          case MaskKind::kCausal: admit = k <= q; break;
          case MaskKind::kBidirectional: admit = true; break;
          case MaskKind::kPrefix: admit = k < mode.prefix_len || k <= q; break;
        }
        if (admit) mask[(r * len + q) * len + k] = 0.0;
      }
    }
  }
  return Tensor(Shape{b, 1, len, len}, std::move(mask));
}

namespace {

// [B, L, D] -> [B, H, L, hd]
Tensor split_heads(const Tensor& x, std::size_t b, std::size_t len, std::size_t heads, std::size_t hd) {
  return ops::transpose(ops::reshape(x, Shape{b, len, heads, hd}), 1, 2);
}

Tensor merge_heads(const Tensor& x, std::size_t b, std::size_t len, std::size_t d) {
  return ops::reshape(ops::transpose(x, 1, 2), Shape{b, len, d});
}

}  // namespace

HiddenStates forward(const EncoderConfig& config, const EncoderParams& params, const Batch& batch,
                     const RunMode& mode, AttentionTrace* trace) {
  config.validate();
  if (batch.length > config.max_len) {
    throw std::invalid_argument("forward: sequence length " + std::to_string(batch.length) +
                                " exceeds max_len " + std::to_string(config.max_len));
  }
  batch.validate(config.vocab_size, config.padding_side);

  const std::size_t b = batch.rows;
  const std::size_t len = batch.length;
  const std::size_t d = config.d_model;
  const std::size_t heads = config.n_heads;
  const std::size_t hd = config.head_dim();
  const double inv_sqrt_hd = 1.0 / std::sqrt(static_cast<double>(hd));

  const Tensor mask = build_attention_mask(batch, config.mask_mode);
  Tensor x = ops::embedding(params.embed, batch.token_ids, Shape{b, len});

  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    const LayerParams& layer = params.layers[i];
    const CounterKey attn_key{config.seed, 2 * i, mode.step};
    const CounterKey ffn_key{config.seed, 2 * i + 1, mode.step};

    const Tensor h = ops::rms_norm(x, layer.attn_norm);
    const Tensor q = ops::rope(split_heads(ops::matmul(h, layer.wq), b, len, heads, hd));
    const Tensor k = ops::rope(split_heads(ops::matmul(h, layer.wk), b, len, heads, hd));
    const Tensor v = split_heads(ops::matmul(h, layer.wv), b, len, heads, hd);
    const Tensor scores = ops::scale(ops::matmul(q, ops::transpose(k, 2, 3)), inv_sqrt_hd);
    Tensor probs = ops::softmax(scores, 3, mask);
    if (trace != nullptr) trace->probabilities.push_back(probs);
    probs = ops::dropout(probs, config.attn_dropout, attn_key, mode.train);
    const Tensor attn = ops::matmul(merge_heads(ops::matmul(probs, v), b, len, d), layer.wo);
    x = ops::add(x, attn);

    const Tensor h2 = ops::rms_norm(x, layer.ffn_norm);
    const Tensor gated = ops::mul(ops::gelu(ops::matmul(h2, layer.w_gate)), ops::matmul(h2, layer.w_up));
    Tensor ffn = ops::matmul(gated, layer.w_down);
    ffn = ops::dropout(ffn, config.ffn_dropout, ffn_key, mode.train);
    x = ops::add(x, ffn);
  }
  x = ops::rms_norm(x, params.final_norm);

  HiddenStates out;
  out.activations = x;
  out.rows = b;
  out.length = len;
  out.pad_mask = batch.pad_mask;
  return out;
}

}  // namespace dec2enc
