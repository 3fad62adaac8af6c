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

#include "dec2enc/ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <utility>

namespace dec2enc::ops {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

using detail::NodePtr;

bool needs_record(std::initializer_list<const Tensor*> inputs) {
  if (current_tape() == nullptr) return false;
  for (const Tensor* t : inputs) {
    if (t->requires_grad()) return true;
  }
  return false;
}

void record(std::vector<NodePtr> inputs, const Tensor& out, Tape::BackwardFn fn) {
  out.node()->requires_grad = true;
  current_tape()->record(std::move(inputs), out.node(), std::move(fn));
}

int normalize_axis(int axis, std::size_t rank, const char* op) {
  const int n = static_cast<int>(rank);
  const int a = axis < 0 ? axis + n : axis;
  if (a < 0 || a >= n) {
    throw std::out_of_range(std::string(op) + ": axis " + std::to_string(axis) +
                            " out of range for rank " + std::to_string(rank));
  }
  return a;
}

Shape broadcast_shapes(const Shape& a, const Shape& b, const char* op) {
  const std::size_t rank = std::max(a.size(), b.size());
  Shape out(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    const std::size_t da = i < rank - a.size() ? 1 : a[i - (rank - a.size())];
    const std::size_t db = i < rank - b.size() ? 1 : b[i - (rank - b.size())];
    if (da != db && da != 1 && db != 1) {
      throw ShapeError(std::string(op) + ": shapes " + shape_to_string(a) + " and " +
                       shape_to_string(b) + " are not broadcastable");
    }
    out[i] = std::max(da, db);
  }
  return out;
}

// Flat source index for every flat position of `dst`, where `src`
// broadcasts to `dst`.
std::vector<std::size_t> broadcast_map(const Shape& src, const Shape& dst) {
  const std::size_t rank = dst.size();
  const std::size_t offset = rank - src.size();
  std::vector<std::size_t> stride(rank, 0);
  std::size_t s = 1;
  for (std::size_t i = rank; i-- > offset;) {
    const std::size_t extent = src[i - offset];
    stride[i] = extent == 1 ? 0 : s;
    s *= extent;
  }
  const std::size_t total = shape_numel(dst);
  std::vector<std::size_t> map(total);
  std::vector<std::size_t> idx(rank, 0);
  std::size_t pos = 0;
  for (std::size_t flat = 0; flat < total; ++flat) {
    map[flat] = pos;
    for (std::size_t d = rank; d-- > 0;) {
      ++idx[d];
      pos += stride[d];
      if (idx[d] < dst[d]) break;
      pos -= stride[d] * idx[d];
      idx[d] = 0;
    }
  }
  return map;
}

Shape strip_axis(const Shape& s, int axis) {
  Shape out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (static_cast<int>(i) != axis) out.push_back(s[i]);
  }
  return out;
}

enum class Binary { kAdd, kSub, kMul };

Tensor binary(const Tensor& a, const Tensor& b, Binary kind, const char* name) {
  const bool same = a.shape() == b.shape();
  const Shape out_shape = same ? a.shape() : broadcast_shapes(a.shape(), b.shape(), name);
  const std::size_t n = shape_numel(out_shape);
  std::vector<std::size_t> amap;
  std::vector<std::size_t> bmap;
  if (!same) {
    amap = broadcast_map(a.shape(), out_shape);
    bmap = broadcast_map(b.shape(), out_shape);
  }
  const auto ad = a.data();
  const auto bd = b.data();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = ad[same ? i : amap[i]];
    const double y = bd[same ? i : bmap[i]];
    switch (kind) {
      case Binary::kAdd: out[i] = x + y; break;
      case Binary::kSub: out[i] = x - y; break;
      case Binary::kMul: out[i] = x * y; break;
    }
  }
  Tensor result(out_shape, std::move(out));
  if (needs_record({&a, &b})) {
    NodePtr an = a.node();
    NodePtr bn = b.node();
    record({an, bn}, result,
           [an, bn, kind, same, amap = std::move(amap), bmap = std::move(bmap)](
               std::span<const double> g) {
             const std::size_t n = g.size();
             if (an->requires_grad) {
               auto& ga = an->grad;
               for (std::size_t i = 0; i < n; ++i) {
                 const double scale = kind == Binary::kMul ? bn->data[same ? i : bmap[i]] : 1.0;
                 ga[same ? i : amap[i]] += g[i] * scale;
               }
             }
             if (bn->requires_grad) {
               auto& gb = bn->grad;
               for (std::size_t i = 0; i < n; ++i) {
                 double scale = 1.0;
                 if (kind == Binary::kSub) scale = -1.0;
                 if (kind == Binary::kMul) scale = an->data[same ? i : amap[i]];
                 gb[same ? i : bmap[i]] += g[i] * scale;
               }
             }
           });
  }
  return result;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return binary(a, b, Binary::kAdd, "add"); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary(a, b, Binary::kSub, "sub"); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary(a, b, Binary::kMul, "mul"); }

Tensor scale(const Tensor& x, double factor) {
  std::vector<double> out(x.data().begin(), x.data().end());
  for (double& v : out) v *= factor;
  Tensor result(x.shape(), std::move(out));
  if (needs_record({&x})) {
    NodePtr xn = x.node();
    record({xn}, result, [xn, factor](std::span<const double> g) {
      for (std::size_t i = 0; i < g.size(); ++i) xn->grad[i] += factor * g[i];
    });
  }
  return result;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.dim() < 2 || b.dim() < 2 || a.shape().back() != b.shape()[b.dim() - 2]) {
    throw ShapeError("matmul: incompatible shapes " + shape_to_string(a.shape()) + " and " +
                     shape_to_string(b.shape()));
  }
  const std::size_t m = a.shape()[a.dim() - 2];
  const std::size_t k = a.shape().back();
  const std::size_t n = b.shape().back();
  const Shape batch_a(a.shape().begin(), a.shape().end() - 2);
  const Shape batch_b(b.shape().begin(), b.shape().end() - 2);
  Shape batch;
  try {
    batch = broadcast_shapes(batch_a, batch_b, "matmul");
  } catch (const ShapeError&) {
    throw ShapeError("matmul: batch dims of " + shape_to_string(a.shape()) + " and " +
                     shape_to_string(b.shape()) + " are not broadcastable");
  }
  Shape out_shape = batch;
  out_shape.push_back(m);
  out_shape.push_back(n);

  const auto ad = a.data().data();
  const auto bd = b.data().data();
  std::vector<double> out(shape_numel(out_shape), 0.0);

  // A shared right operand collapses the batch into one GEMM.
  const bool shared_rhs = batch_b.empty();
  std::vector<std::size_t> amap;
  std::vector<std::size_t> bmap;
  const std::size_t nbatch = shape_numel(batch);
  if (shared_rhs) {
    const std::size_t rows = nbatch * m;
    MutMap(out.data(), rows, n).noalias() = ConstMap(ad, rows, k) * ConstMap(bd, k, n);
  } else {
    amap = broadcast_map(batch_a, batch);
    bmap = broadcast_map(batch_b, batch);
    for (std::size_t i = 0; i < nbatch; ++i) {
      MutMap(out.data() + i * m * n, m, n).noalias() =
          ConstMap(ad + amap[i] * m * k, m, k) * ConstMap(bd + bmap[i] * k * n, k, n);
    }
  }
  Tensor result(out_shape, std::move(out));
  if (needs_record({&a, &b})) {
    NodePtr an = a.node();
    NodePtr bn = b.node();
    record({an, bn}, result,
           [an, bn, m, k, n, nbatch, shared_rhs, amap = std::move(amap),
            bmap = std::move(bmap)](std::span<const double> g) {
             if (shared_rhs) {
               const std::size_t rows = nbatch * m;
               ConstMap gm(g.data(), rows, n);
               if (an->requires_grad) {
                 MutMap(an->grad.data(), rows, k).noalias() +=
                     gm * ConstMap(bn->data.data(), k, n).transpose();
               }
               if (bn->requires_grad) {
                 MutMap(bn->grad.data(), k, n).noalias() +=
                     ConstMap(an->data.data(), rows, k).transpose() * gm;
               }
               return;
             }
             for (std::size_t i = 0; i < nbatch; ++i) {
               ConstMap gm(g.data() + i * m * n, m, n);
               if (an->requires_grad) {
                 MutMap(an->grad.data() + amap[i] * m * k, m, k).noalias() +=
                     gm * ConstMap(bn->data.data() + bmap[i] * k * n, k, n).transpose();
               }
               if (bn->requires_grad) {
                 MutMap(bn->grad.data() + bmap[i] * k * n, k, n).noalias() +=
                     ConstMap(an->data.data() + amap[i] * m * k, m, k).transpose() * gm;
               }
             }
           });
  }
  return result;
}

Tensor transpose(const Tensor& x, int axis0, int axis1) {
  const std::size_t rank = x.dim();
  const int a0 = normalize_axis(axis0, rank, "transpose");
  const int a1 = normalize_axis(axis1, rank, "transpose");
  Shape out_shape = x.shape();
  std::swap(out_shape[a0], out_shape[a1]);

  std::vector<std::size_t> in_stride(rank);
  std::size_t s = 1;
  for (std::size_t i = rank; i-- > 0;) {
    in_stride[i] = s;
    s *= x.shape()[i];
  }
  std::vector<std::size_t> stride = in_stride;
  std::swap(stride[a0], stride[a1]);

  const std::size_t total = x.numel();
  std::vector<std::size_t> map(total);
  std::vector<std::size_t> idx(rank, 0);
  std::size_t pos = 0;
  for (std::size_t flat = 0; flat < total; ++flat) {
    map[flat] = pos;
    for (std::size_t d = rank; d-- > 0;) {
      ++idx[d];
      pos += stride[d];
      if (idx[d] < out_shape[d]) break;
      pos -= stride[d] * idx[d];
      idx[d] = 0;
    }
  }
  const auto xd = x.data();
  std::vector<double> out(total);
  for (std::size_t i = 0; i < total; ++i) out[i] = xd[map[i]];
  Tensor result(out_shape, std::move(out));
  if (needs_record({&x})) {
    NodePtr xn = x.node();
    record({xn}, result, [xn, map = std::move(map)](std::span<const double> g) {
      for (std::size_t i = 0; i < g.size(); ++i) xn->grad[map[i]] += g[i];
    });
  }
  return result;
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw ShapeError("reshape: cannot view " + shape_to_string(x.shape()) + " as " +
                     shape_to_string(shape));
  }
  Tensor result(std::move(shape), std::vector<double>(x.data().begin(), x.data().end()));
  if (needs_record({&x})) {
    NodePtr xn = x.node();
    record({xn}, result, [xn](std::span<const double> g) {
      for (std::size_t i = 0; i < g.size(); ++i) xn->grad[i] += g[i];
    });
  }
  return result;
}

Tensor softmax(const Tensor& x, int axis, const Tensor& additive_mask) {
  const int ax = normalize_axis(axis, x.dim(), "softmax");
  std::vector<std::size_t> mmap;
  const bool masked = additive_mask.defined();
  if (masked) {
    const Shape b = broadcast_shapes(additive_mask.shape(), x.shape(), "softmax mask");
    if (b != x.shape()) {
      throw ShapeError("softmax: mask " + shape_to_string(additive_mask.shape()) +
                       " does not broadcast to " + shape_to_string(x.shape()));
    }
    mmap = broadcast_map(additive_mask.shape(), x.shape());
  }
  std::size_t outer = 1;
  std::size_t inner = 1;
  for (int i = 0; i < ax; ++i) outer *= x.shape()[i];
  for (std::size_t i = ax + 1; i < x.dim(); ++i) inner *= x.shape()[i];
  const std::size_t n = x.shape()[ax];

  const auto xd = x.data();
  const auto md = masked ? additive_mask.data() : std::span<const double>();
  std::vector<double> out(x.numel(), 0.0);
  constexpr double kDropThreshold = kMaskDrop / 2;
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      const std::size_t base = o * n * inner + in;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < n; ++j) {
        const std::size_t idx = base + j * inner;
        const double add = masked ? md[mmap[idx]] : 0.0;
        if (add <= kDropThreshold) continue;
        mx = std::max(mx, xd[idx] + add);
      }
      if (mx == -std::numeric_limits<double>::infinity()) continue;  // fully masked
      double total = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const std::size_t idx = base + j * inner;
        const double add = masked ? md[mmap[idx]] : 0.0;
        if (add <= kDropThreshold) continue;
        out[idx] = std::exp(xd[idx] + add - mx);
        total += out[idx];
      }
      for (std::size_t j = 0; j < n; ++j) out[base + j * inner] /= total;
    }
  }
  Tensor result(x.shape(), std::move(out));
  if (needs_record({&x})) {
    NodePtr xn = x.node();
    NodePtr y = result.node();
    record({xn}, result, [xn, y, outer, inner, n](std::span<const double> g) {
      for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t in = 0; in < inner; ++in) {
          const std::size_t base = o * n * inner + in;
          double dot = 0.0;
          for (std::size_t j = 0; j < n; ++j) dot += y->data[base + j * inner] * g[base + j * inner];
          for (std::size_t j = 0; j < n; ++j) {
            const std::size_t idx = base + j * inner;
            xn->grad[idx] += y->data[idx] * (g[idx] - dot);
          }
        }
      }
    });
  }
  return result;
}

Tensor rms_norm(const Tensor& x, const Tensor& gain, double eps) {
  if (x.dim() < 1 || gain.dim() != 1 || gain.shape()[0] != x.shape().back()) {
    throw ShapeError("rms_norm: gain " + shape_to_string(gain.shape()) +
                     " does not match last axis of " + shape_to_string(x.shape()));
  }
  const std::size_t d = x.shape().back();
  const std::size_t rows = x.numel() / d;
  const auto xd = x.data();
  const auto gd = gain.data();
  std::vector<double> inv(rows);
  std::vector<double> out(x.numel());
  for (std::size_t r = 0; r < rows; ++r) {
    double ms = 0.0;
    for (std::size_t j = 0; j < d; ++j) ms += xd[r * d + j] * xd[r * d + j];
    inv[r] = 1.0 / std::sqrt(ms / static_cast<double>(d) + eps);
    for (std::size_t j = 0; j < d; ++j) out[r * d + j] = xd[r * d + j] * inv[r] * gd[j];
  }
  Tensor result(x.shape(), std::move(out));
  if (needs_record({&x, &gain})) {
    NodePtr xn = x.node();
    NodePtr gn = gain.node();
    record({xn, gn}, result, [xn, gn, d, rows, inv = std::move(inv)](std::span<const double> g) {
      const auto& xv = xn->data;
      const auto& gv = gn->data;
      for (std::size_t r = 0; r < rows; ++r) {
        const double* xr = xv.data() + r * d;
        const double* gr = g.data() + r * d;
        if (xn->requires_grad) {
          double dot = 0.0;
          for (std::size_t j = 0; j < d; ++j) dot += gr[j] * gv[j] * xr[j];
          const double c = inv[r] * inv[r] * inv[r] * dot / static_cast<double>(d);
          for (std::size_t j = 0; j < d; ++j) {
            xn->grad[r * d + j] += inv[r] * gv[j] * gr[j] - c * xr[j];
          }
        }
        if (gn->requires_grad) {
          for (std::size_t j = 0; j < d; ++j) gn->grad[j] += gr[j] * xr[j] * inv[r];
        }
      }
    });
  }
  return result;
}

Tensor gelu(const Tensor& x) {
  constexpr double kC = 0.7978845608028654;  // sqrt(2/pi)
  constexpr double kA = 0.044715;
  const auto xd = x.data();
  std::vector<double> out(x.numel());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = xd[i];
    out[i] = 0.5 * v * (1.0 + std::tanh(kC * (v + kA * v * v * v)));
  }
  Tensor result(x.shape(), std::move(out));
  if (needs_record({&x})) {
    NodePtr xn = x.node();
    record({xn}, result, [xn](std::span<const double> g) {
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double v = xn->data[i];
        const double t = std::tanh(kC * (v + kA * v * v * v));
        const double dt = (1.0 - t * t) * kC * (1.0 + 3.0 * kA * v * v);
        xn->grad[i] += g[i] * (0.5 * (1.0 + t) + 0.5 * v * dt);
      }
    });
  }
  return result;
}

Tensor embedding(const Tensor& table, std::span<const int> ids, const Shape& ids_shape) {
  if (table.dim() != 2) {
    throw ShapeError("embedding: table must be 2-D, got " + shape_to_string(table.shape()));
  }
  if (shape_numel(ids_shape) != ids.size()) {
    throw ShapeError("embedding: ids shape " + shape_to_string(ids_shape) + " does not hold " +
                     std::to_string(ids.size()) + " ids");
  }
  const std::size_t vocab = table.shape()[0];
  const std::size_t d = table.shape()[1];
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab) {
      throw std::out_of_range("embedding: token id " + std::to_string(id) +
                              " outside vocabulary of " + std::to_string(vocab));
    }
  }
  Shape out_shape = ids_shape;
  out_shape.push_back(d);
  const auto td = table.data();
  std::vector<double> out(ids.size() * d);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    std::copy_n(td.begin() + static_cast<std::ptrdiff_t>(ids[i] * d), d, out.begin() + i * d);
  }
  Tensor result(out_shape, std::move(out));
  if (needs_record({&table})) {
    NodePtr tn = table.node();
    std::vector<int> idv(ids.begin(), ids.end());
    record({tn}, result, [tn, d, idv = std::move(idv)](std::span<const double> g) {
      for (std::size_t i = 0; i < idv.size(); ++i) {
        double* row = tn->grad.data() + static_cast<std::size_t>(idv[i]) * d;
        for (std::size_t j = 0; j < d; ++j) row[j] += g[i * d + j];
      }
    });
  }
  return result;
}

Tensor sum(const Tensor& x) {
  double total = 0.0;
  for (double v : x.data()) total += v;
  Tensor result = Tensor::scalar(total);
  if (needs_record({&x})) {
    NodePtr xn = x.node();
    record({xn}, result, [xn](std::span<const double> g) {
      for (double& v : xn->grad) v += g[0];
    });
  }
  return result;
}

Tensor mean(const Tensor& x) { return scale(sum(x), 1.0 / static_cast<double>(x.numel())); }

Tensor sum_axis(const Tensor& x, int axis) {
  const int ax = normalize_axis(axis, x.dim(), "sum_axis");
  std::size_t outer = 1;
  std::size_t inner = 1;
  for (int i = 0; i < ax; ++i) outer *= x.shape()[i];
  for (std::size_t i = ax + 1; i < x.dim(); ++i) inner *= x.shape()[i];
  const std::size_t n = x.shape()[ax];
  const auto xd = x.data();
  std::vector<double> out(outer * inner, 0.0);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t in = 0; in < inner; ++in) {
        out[o * inner + in] += xd[(o * n + j) * inner + in];
      }
    }
  }
  Tensor result(strip_axis(x.shape(), ax), std::move(out));
  if (needs_record({&x})) {
    NodePtr xn = x.node();
    record({xn}, result, [xn, outer, inner, n](std::span<const double> g) {
      for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t j = 0; j < n; ++j) {
          for (std::size_t in = 0; in < inner; ++in) {
            xn->grad[(o * n + j) * inner + in] += g[o * inner + in];
          }
        }
      }
    });
  }
  return result;
}

Tensor masked_mean(const Tensor& x, std::span<const std::uint8_t> keep) {
  if (x.dim() < 2 || keep.size() != x.shape()[0] * x.shape()[1]) {
    throw ShapeError("masked_mean: mask of " + std::to_string(keep.size()) +
                     " entries does not cover the leading axes of " + shape_to_string(x.shape()));
  }
  const std::size_t b = x.shape()[0];
  const std::size_t l = x.shape()[1];
  const std::size_t inner = x.numel() / (b * l);
  std::vector<double> weight(b * l, 0.0);
  for (std::size_t r = 0; r < b; ++r) {
    std::size_t count = 0;
    for (std::size_t p = 0; p < l; ++p) count += keep[r * l + p] != 0;
    if (count == 0) throw std::invalid_argument("masked_mean: row " + std::to_string(r) + " has no kept positions");
    for (std::size_t p = 0; p < l; ++p) {
      if (keep[r * l + p]) weight[r * l + p] = 1.0 / static_cast<double>(count);
    }
  }
  const auto xd = x.data();
  std::vector<double> out(b * inner, 0.0);
  for (std::size_t r = 0; r < b; ++r) {
    for (std::size_t p = 0; p < l; ++p) {
      const double w = weight[r * l + p];
      if (w == 0.0) continue;
      const double* src = xd.data() + (r * l + p) * inner;
      for (std::size_t i = 0; i < inner; ++i) out[r * inner + i] += w * src[i];
    }
  }
  Shape out_shape = strip_axis(x.shape(), 1);
  Tensor result(out_shape, std::move(out));
  if (needs_record({&x})) {
    NodePtr xn = x.node();
    record({xn}, result, [xn, b, l, inner, weight = std::move(weight)](std::span<const double> g) {
      for (std::size_t r = 0; r < b; ++r) {
        for (std::size_t p = 0; p < l; ++p) {
          const double w = weight[r * l + p];
          if (w == 0.0) continue;
          double* dst = xn->grad.data() + (r * l + p) * inner;
          for (std::size_t i = 0; i < inner; ++i) dst[i] += w * g[r * inner + i];
        }
      }
    });
  }
  return result;
}

Tensor gather_rows(const Tensor& x, std::span<const std::size_t> index, std::size_t k) {
  if (x.dim() != 3 || index.size() != x.shape()[0] * k) {
    throw ShapeError("gather_rows: " + std::to_string(index.size()) + " indices for k=" +
                     std::to_string(k) + " do not fit " + shape_to_string(x.shape()));
  }
  const std::size_t b = x.shape()[0];
  const std::size_t l = x.shape()[1];
  const std::size_t d = x.shape()[2];
  for (std::size_t p : index) {
    if (p >= l) throw std::out_of_range("gather_rows: position " + std::to_string(p) + " >= " + std::to_string(l));
  }
  const auto xd = x.data();
  std::vector<double> out(b * k * d);
  for (std::size_t r = 0; r < b; ++r) {
    for (std::size_t j = 0; j < k; ++j) {
      const std::size_t src = (r * l + index[r * k + j]) * d;
      std::copy_n(xd.begin() + static_cast<std::ptrdiff_t>(src), d, out.begin() + (r * k + j) * d);
    }
  }
  Tensor result(Shape{b, k, d}, std::move(out));
  if (needs_record({&x})) {
    NodePtr xn = x.node();
    std::vector<std::size_t> idx(index.begin(), index.end());
    record({xn}, result, [xn, b, l, k, d, idx = std::move(idx)](std::span<const double> g) {
      for (std::size_t r = 0; r < b; ++r) {
        for (std::size_t j = 0; j < k; ++j) {
          double* dst = xn->grad.data() + (r * l + idx[r * k + j]) * d;
          const double* src = g.data() + (r * k + j) * d;
          for (std::size_t i = 0; i < d; ++i) dst[i] += src[i];
        }
      }
    });
  }
  return result;
}

Tensor rope(const Tensor& x, double base) {
  if (x.dim() < 2 || x.shape().back() % 2 != 0) {
    throw ShapeError("rope: needs [..., L, even head_dim], got " + shape_to_string(x.shape()));
  }
  const std::size_t hd = x.shape().back();
  const std::size_t len = x.shape()[x.dim() - 2];
  const std::size_t half = hd / 2;
  std::vector<double> cs(len * half);
  std::vector<double> sn(len * half);
  for (std::size_t p = 0; p < len; ++p) {
    for (std::size_t i = 0; i < half; ++i) {
      const double freq = std::pow(base, -2.0 * static_cast<double>(i) / static_cast<double>(hd));
      const double angle = static_cast<double>(p) * freq;
      cs[p * half + i] = std::cos(angle);
      sn[p * half + i] = std::sin(angle);
    }
  }
  const std::size_t rows = x.numel() / hd;
  const auto xd = x.data();
  std::vector<double> out(x.numel());
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t p = r % len;
    for (std::size_t i = 0; i < half; ++i) {
      const double c = cs[p * half + i];
      const double s = sn[p * half + i];
      const double x0 = xd[r * hd + 2 * i];
      const double x1 = xd[r * hd + 2 * i + 1];
      out[r * hd + 2 * i] = x0 * c - x1 * s;
      out[r * hd + 2 * i + 1] = x0 * s + x1 * c;
    }
  }
  Tensor result(x.shape(), std::move(out));
  if (needs_record({&x})) {
    NodePtr xn = x.node();
    record({xn}, result,
           [xn, rows, len, hd, half, cs = std::move(cs), sn = std::move(sn)](std::span<const double> g) {
             for (std::size_t r = 0; r < rows; ++r) {
               const std::size_t p = r % len;
               for (std::size_t i = 0; i < half; ++i) {
                 const double c = cs[p * half + i];
                 const double s = sn[p * half + i];
                 const double g0 = g[r * hd + 2 * i];
                 const double g1 = g[r * hd + 2 * i + 1];
                 xn->grad[r * hd + 2 * i] += g0 * c + g1 * s;
                 xn->grad[r * hd + 2 * i + 1] += -g0 * s + g1 * c;
               }
             }
           });
  }
  return result;
}

Tensor dropout(const Tensor& x, double p, const CounterKey& key, bool train) {
  if (!(p >= 0.0 && p < 1.0)) {
    throw std::invalid_argument("dropout: rate " + std::to_string(p) + " outside [0, 1)");
  }
  if (!train || p == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - p);
  std::vector<double> factor(x.numel());
  for (std::size_t i = 0; i < factor.size(); ++i) {
    factor[i] = key.uniform(i) >= p ? keep_scale : 0.0;
  }
  const auto xd = x.data();
  std::vector<double> out(x.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xd[i] * factor[i];
  Tensor result(x.shape(), std::move(out));
  if (needs_record({&x})) {
    NodePtr xn = x.node();
    record({xn}, result, [xn, factor = std::move(factor)](std::span<const double> g) {
      for (std::size_t i = 0; i < g.size(); ++i) xn->grad[i] += g[i] * factor[i];
    });
  }
  return result;
}

}  // namespace dec2enc::ops
