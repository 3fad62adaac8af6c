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

#ifndef DEC2ENC_ENCODER_HPP_
#define DEC2ENC_ENCODER_HPP_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "dec2enc/tensor.hpp"

namespace dec2enc {

// Reserved token ids shared by the encoder and the synthetic tasks.
inline constexpr int kPadId = 0;
inline constexpr int kCueId = 1;
inline constexpr int kSepId = 2;
inline constexpr int kMarkerId = 3;
inline constexpr int kFirstContentId = 4;

enum class MaskKind { kCausal, kBidirectional, kPrefix };

struct MaskMode {
  MaskKind kind = MaskKind::kBidirectional;
  std::size_t prefix_len = 0;  // only meaningful for kPrefix

  static MaskMode causal() { return {MaskKind::kCausal, 0}; }
  static MaskMode bidirectional() { return {MaskKind::kBidirectional, 0}; }
  static MaskMode prefix(std::size_t len) { return {MaskKind::kPrefix, len}; }

  // "causal", "bidirectional", "prefix:N".
  static MaskMode parse(const std::string& text);
  std::string to_string() const;
  bool operator==(const MaskMode&) const = default;
};

enum class PaddingSide { kLeft, kRight };

PaddingSide parse_padding_side(const std::string& text);
std::string to_string(PaddingSide side);

struct EncoderConfig {
  std::size_t vocab_size = 260;
  std::size_t d_model = 64;
  std::size_t n_layers = 2;
  std::size_t n_heads = 4;
  std::size_t d_ff = 256;
  std::size_t max_len = 64;
  MaskMode mask_mode = MaskMode::bidirectional();
  PaddingSide padding_side = PaddingSide::kRight;
  double attn_dropout = 0.0;
  double ffn_dropout = 0.0;
  std::uint64_t seed = 0;

  std::size_t head_dim() const { return d_model / n_heads; }
  // Throws std::invalid_argument on any broken invariant.
  void validate() const;
};

// Padded token matrix [rows, length]. pad_mask is 1 for real tokens.
struct Batch {
  std::size_t rows = 0;
  std::size_t length = 0;
  std::vector<int> token_ids;
  std::vector<std::uint8_t> pad_mask;
  std::vector<std::size_t> lengths;

  // Pads every sequence to `pad_to` (0 means the longest one) on `side`.
  static Batch from_sequences(const std::vector<std::vector<int>>& sequences, PaddingSide side,
                              std::size_t pad_to = 0, int pad_id = kPadId);

  bool is_real(std::size_t row, std::size_t pos) const { return pad_mask[row * length + pos] != 0; }
  // First real position of `row`.
  std::size_t first_real(std::size_t row) const;
  void validate(std::size_t vocab_size, PaddingSide side) const;
};

struct HiddenStates {
  Tensor activations;  // [B, L, D]
  std::size_t rows = 0;
  std::size_t length = 0;
  std::vector<std::uint8_t> pad_mask;
};

struct LayerParams {
  Tensor attn_norm;  // [D]
  Tensor wq, wk, wv, wo;  // [D, D]
  Tensor ffn_norm;  // [D]
  Tensor w_gate, w_up;  // [D, F]
  Tensor w_down;  // [F, D]
};

struct EncoderParams {
  Tensor embed;  // [V, D]
  std::vector<LayerParams> layers;
  Tensor final_norm;  // [D]

  std::vector<std::pair<std::string, Tensor>> named() const;
};

// Weight matrices ~ N(0, 1/fan_in); the embedding table is a one-hot lookup
// (fan_in 1); norm gains start at 1.
EncoderParams init_params(const EncoderConfig& config, std::uint64_t seed);

struct RunMode {
  bool train = false;
  std::uint64_t step = 0;  // dropout counter, advanced once per optimizer step
};

// Additive mask [B, 1, L, L]: 0 where query q may attend to key k, and
// ops::kMaskDrop elsewhere. Keys must be real tokens.
Tensor build_attention_mask(const Batch& batch, const MaskMode& mode);

// Optional capture of per-layer attention probabilities [B, H, L, L].
struct AttentionTrace {
  std::vector<Tensor> probabilities;
};

HiddenStates forward(const EncoderConfig& config, const EncoderParams& params, const Batch& batch,
                     const RunMode& mode, AttentionTrace* trace = nullptr);

}  // namespace dec2enc

#endif  // DEC2ENC_ENCODER_HPP_
