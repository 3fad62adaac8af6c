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

#ifndef DEC2ENC_POOLING_HPP_
#define DEC2ENC_POOLING_HPP_

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "dec2enc/encoder.hpp"
#include "dec2enc/tensor.hpp"

namespace dec2enc {

// With skip_pads the k earliest/latest *real* tokens are used. Without it the
// literal array positions 0..k-1 / L-k..L-1 are taken, pads included; that
// mode exists only so the harness can measure the difference.
struct FirstK {
  std::size_t k = 1;
  bool skip_pads = true;
  bool operator==(const FirstK&) const = default;
};

struct LastK {
  std::size_t k = 1;
  bool skip_pads = true;
  bool operator==(const LastK&) const = default;
};

struct MeanPool {
  bool operator==(const MeanPool&) const = default;
};

enum class ProbeVariant { kQueryProbe, kKVProbe };

struct AttentionPool {
  ProbeVariant variant = ProbeVariant::kQueryProbe;
  std::size_t latents = 1;
  std::size_t heads = 1;
  bool operator==(const AttentionPool&) const = default;
};

struct PoolingSpec {
  std::variant<FirstK, LastK, MeanPool, AttentionPool> kind = MeanPool{};

  // Number of pooled vectors produced per row.
  std::size_t arity() const;
  std::string label() const;
  void validate(std::size_t d_model) const;
  bool operator==(const PoolingSpec&) const = default;
};

// Empty for parameter-free kinds.
struct PoolerParams {
  Tensor latents;  // [V, D]
  Tensor wq, wk, wv, wo;  // [D, D]

  std::vector<std::pair<std::string, Tensor>> named() const;
};

PoolerParams init_pooler(const PoolingSpec& spec, std::size_t d_model, std::uint64_t seed);

// hidden [B, L, D] -> [B, arity, D].
Tensor pool(const PoolingSpec& spec, const PoolerParams& params, const HiddenStates& hidden);

}  // namespace dec2enc

#endif  // DEC2ENC_POOLING_HPP_
