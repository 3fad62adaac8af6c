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

#ifndef DEC2ENC_OPS_HPP_
#define DEC2ENC_OPS_HPP_

#include <cstddef>
#include <cstdint>
#include <span>

#include "dec2enc/rng.hpp"
#include "dec2enc/tensor.hpp"

// Differentiable primitives. Every function records a backward rule on the
// current thread's tape when at least one input requires grad.
namespace dec2enc::ops {

// Additive-mask value for dropped entries. Anything at or below half of it
// is treated as dropped exactly (probability 0), never exponentiated.
inline constexpr double kMaskDrop = -1e30;

// Elementwise with numpy-style broadcasting.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);

// a[..., m, k] x b[..., k, n] -> [..., m, n]; batch dims broadcast.
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor transpose(const Tensor& x, int axis0, int axis1);
Tensor reshape(const Tensor& x, Shape shape);

// Softmax along `axis`. `additive_mask`, when defined, broadcasts to x.
// Rows whose entries are all dropped come out as zeros.
Tensor softmax(const Tensor& x, int axis, const Tensor& additive_mask = Tensor());

// x / sqrt(mean(x^2) + eps) * gain, normalized over the last axis.
Tensor rms_norm(const Tensor& x, const Tensor& gain, double eps = 1e-6);

// tanh approximation.
Tensor gelu(const Tensor& x);

// Rows of `table` [V, D] selected by `ids` laid out as `ids_shape`; result is
// ids_shape + [D]. Backward scatter-adds into the table.
Tensor embedding(const Tensor& table, std::span<const int> ids, const Shape& ids_shape);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
Tensor sum_axis(const Tensor& x, int axis);

// x [B, L, ...], keep [B * L] (nonzero = real). Mean over the kept positions
// of each row -> [B, ...]. Rows need at least one kept position.
Tensor masked_mean(const Tensor& x, std::span<const std::uint8_t> keep);

// x [B, L, D], index [B * k] positions in [0, L) -> [B, k, D].
Tensor gather_rows(const Tensor& x, std::span<const std::size_t> index, std::size_t k);

// Rotary position embedding over the last axis of x [..., L, head_dim]; the
// row at index l along axis -2 is rotated by position l.
Tensor rope(const Tensor& x, double base = 10000.0);

// Inverted dropout driven by a counter-based key: identity when !train or
// p == 0, otherwise each element survives with probability 1-p and is scaled
// by 1/(1-p).
Tensor dropout(const Tensor& x, double p, const CounterKey& key, bool train);

}  // namespace dec2enc::ops

#endif  // DEC2ENC_OPS_HPP_
