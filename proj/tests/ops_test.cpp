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

#include <cmath>

#include "dec2enc/check/gradcheck.hpp"
#include "dec2enc/check/selftest.hpp"
#include "dec2enc/ops.hpp"

namespace dec2enc {
namespace {

void expect_values(const Tensor& t, const std::vector<double>& want, double tol = 0.0) {
  ASSERT_EQ(t.numel(), want.size());
  for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(t[i], want[i], tol) << "index " << i;
}

TEST(Matmul, Identity) {
  const Tensor eye({2, 2}, {1, 0, 0, 1});
  const Tensor b({2, 2}, {5, 6, 7, 8});
  expect_values(ops::matmul(eye, b), {5, 6, 7, 8});
}

TEST(Matmul, RowTimesColumn) {
  const Tensor out = ops::matmul(Tensor({1, 2}, {1, 2}), Tensor({2, 1}, {3, 4}));
  EXPECT_EQ(out.shape(), (Shape{1, 1}));
  EXPECT_DOUBLE_EQ(out[0], 11.0);
}

TEST(Matmul, BatchedMatchesLoops) {
  Rng rng(3);
  const Tensor a = check::random_constant({2, 1, 3, 4}, rng);
  const Tensor b = check::random_constant({3, 4, 5}, rng);
  const Tensor c = ops::matmul(a, b);
  ASSERT_EQ(c.shape(), (Shape{2, 3, 3, 5}));
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      for (std::size_t m = 0; m < 3; ++m) {
        for (std::size_t n = 0; n < 5; ++n) {
          double s = 0.0;
          for (std::size_t k = 0; k < 4; ++k) s += a[(i * 3 + m) * 4 + k] * b[(j * 4 + k) * 5 + n];
          EXPECT_NEAR(c[((i * 3 + j) * 3 + m) * 5 + n], s, 1e-12);
        }
      }
    }
  }
}

TEST(Matmul, ShapeErrorNamesBothShapes) {
  try {
    ops::matmul(Tensor({2, 3}, 0.0), Tensor({4, 2}, 0.0));
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("[2, 3]"), std::string::npos) << msg;
    EXPECT_NE(msg.find("[4, 2]"), std::string::npos) << msg;
  }
}

TEST(Matmul, SumGradientMatchesFiniteDifferences) {
  Rng rng(17);
  const Tensor a = check::random_tensor({3, 3}, rng);
  const Tensor b = check::random_constant({3, 3}, rng);
  const auto r = check::gradient_check([b](const auto& in) { return ops::sum(ops::matmul(in[0], b)); }, {a});
  EXPECT_LE(r.max_rel_error, 1e-6);
}

TEST(Softmax, Uniform) {
  expect_values(ops::softmax(Tensor({3}, 0.0), 0), {1.0 / 3, 1.0 / 3, 1.0 / 3}, 1e-15);
}

TEST(Softmax, MaskedEntryRenormalizes) {
  const Tensor mask({3}, {0.0, 0.0, ops::kMaskDrop});
  expect_values(ops::softmax(Tensor({3}, 0.0), 0, mask), {0.5, 0.5, 0.0});
}

TEST(Softmax, KnownValues) {
  expect_values(ops::softmax(Tensor({3}, {1, 2, 3}), 0), {0.09003, 0.24473, 0.66524}, 1e-5);
}

TEST(Softmax, FullyMaskedRowIsZero) {
  const Tensor mask({2, 2}, {ops::kMaskDrop, ops::kMaskDrop, 0.0, 0.0});
  const Tensor y = ops::softmax(Tensor({2, 2}, {3, 4, 1, 1}), 1, mask);
  expect_values(y, {0, 0, 0.5, 0.5});
}

TEST(Softmax, RowsSumToOneOverKeptEntries) {
  Rng rng(5);
  const Tensor x = check::random_constant({4, 7}, rng, 5.0);
  Tensor mask({4, 7}, 0.0);
  for (std::size_t i = 0; i < 28; ++i) {
    if (i % 7 != 0 && rng.uniform() < 0.4) mask.mutable_data()[i] = ops::kMaskDrop;
  }
  const Tensor y = ops::softmax(x, -1, mask);
  for (std::size_t r = 0; r < 4; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < 7; ++c) {
      EXPECT_GE(y[r * 7 + c], 0.0);
      if (mask[r * 7 + c] != 0.0) EXPECT_EQ(y[r * 7 + c], 0.0);
      s += y[r * 7 + c];
    }
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
}

TEST(Softmax, AxisOutOfRange) {
  EXPECT_THROW(ops::softmax(Tensor({2, 2}, 0.0), 2), std::out_of_range);
  EXPECT_THROW(ops::softmax(Tensor({2, 2}, 0.0), -3), std::out_of_range);
}

TEST(Broadcast, AddAlignsTrailingAxes) {
  const Tensor out = ops::add(Tensor({2, 2}, {1, 2, 3, 4}), Tensor({2}, {10, 20}));
  expect_values(out, {11, 22, 13, 24});
  EXPECT_THROW(ops::add(Tensor({2, 3}, 0.0), Tensor({2}, 0.0)), ShapeError);
}

TEST(RmsNorm, UnitRms) {
  const Tensor y = ops::rms_norm(Tensor({1, 2}, {3, 4}), Tensor({2}, 1.0), 0.0);
  const double rms = std::sqrt((9.0 + 16.0) / 2.0);
  expect_values(y, {3 / rms, 4 / rms}, 1e-15);
}

TEST(Gelu, KnownValues) {
  const Tensor y = ops::gelu(Tensor({3}, {0.0, 1.0, -1.0}));
  EXPECT_DOUBLE_EQ(y[0], 0.0);
  EXPECT_NEAR(y[1], 0.8411919906, 1e-9);
  EXPECT_NEAR(y[2], -0.1588080094, 1e-9);
}

TEST(Embedding, GathersRowsAndScatterAdds) {
  Tensor table({3, 2}, {0, 1, 10, 11, 20, 21});
  table.set_requires_grad(true);
  const std::vector<int> ids = {2, 0, 2};
  Tape tape;
  {
    TapeScope scope(tape);
    const Tensor e = ops::embedding(table, ids, {3});
    expect_values(e, {20, 21, 0, 1, 20, 21});
    tape.backward(ops::sum(e));
  }
  expect_values(Tensor({3, 2}, std::vector<double>(table.grad().begin(), table.grad().end())), {1, 1, 0, 0, 2, 2});
  EXPECT_THROW(ops::embedding(table, std::vector<int>{3}, {1}), std::exception);
}

TEST(MaskedMean, IgnoresDroppedPositions) {
  const Tensor x({1, 3, 2}, {1, 2, 3, 4, 100, 100});
  const std::vector<std::uint8_t> keep = {1, 1, 0};
  expect_values(ops::masked_mean(x, keep), {2, 3});
}

TEST(Rope, PositionZeroIsIdentityAndPairsRotate) {
  const Tensor x({2, 2}, {1, 0, 1, 0});
  const Tensor y = ops::rope(x);
  EXPECT_DOUBLE_EQ(y[0], 1.0);
  EXPECT_DOUBLE_EQ(y[1], 0.0);
  EXPECT_NEAR(y[2], std::cos(1.0), 1e-15);
  EXPECT_NEAR(y[3], std::sin(1.0), 1e-15);
}

TEST(Rope, PreservesNorms) {
  Rng rng(8);
  const Tensor x = check::random_constant({5, 8}, rng);
  const Tensor y = ops::rope(x);
  for (std::size_t p = 0; p < 5; ++p) {
    double nx = 0, ny = 0;
    for (std::size_t d = 0; d < 8; ++d) {
      nx += x[p * 8 + d] * x[p * 8 + d];
      ny += y[p * 8 + d] * y[p * 8 + d];
    }
    EXPECT_NEAR(nx, ny, 1e-12);
  }
}

TEST(Dropout, IdentityInEvalAndAtZeroRate) {
  Rng rng(2);
  const Tensor x = check::random_constant({4, 4}, rng);
  const CounterKey key{1, 0, 0};
  expect_values(ops::dropout(x, 0.5, key, false), std::vector<double>(x.data().begin(), x.data().end()));
  expect_values(ops::dropout(x, 0.0, key, true), std::vector<double>(x.data().begin(), x.data().end()));
  EXPECT_THROW(ops::dropout(x, 1.0, key, true), std::invalid_argument);
  EXPECT_THROW(ops::dropout(x, -0.1, key, true), std::invalid_argument);
}

TEST(Dropout, ZeroesOrScalesAndIsUnbiased) {
  const std::size_t n = 100000;
  const double p = 0.3;
  const Tensor x({n}, 2.0);
  const Tensor y = ops::dropout(x, p, CounterKey{42, 3, 7}, true);
  double total = 0.0;
  std::size_t dropped = 0;
  for (double v : y.data()) {
    if (v == 0.0) ++dropped;
    else EXPECT_DOUBLE_EQ(v, 2.0 / (1.0 - p));
    total += v;
  }
  EXPECT_NEAR(total / n, 2.0, 0.02);
  EXPECT_NEAR(static_cast<double>(dropped) / n, p, 0.01);
}

TEST(Dropout, KeyedByCounter) {
  const Tensor x({64}, 1.0);
  const Tensor a = ops::dropout(x, 0.5, CounterKey{1, 0, 5}, true);
  const Tensor b = ops::dropout(x, 0.5, CounterKey{1, 0, 5}, true);
  const Tensor c = ops::dropout(x, 0.5, CounterKey{1, 0, 6}, true);
  bool differs = false;
  for (std::size_t i = 0; i < 64; ++i) {
    EXPECT_EQ(a[i], b[i]);
    differs |= a[i] != c[i];
  }
  EXPECT_TRUE(differs);
}

TEST(GatherRows, PicksIndexedPositions) {
  const Tensor x({1, 3, 2}, {0, 1, 10, 11, 20, 21});
  const std::vector<std::size_t> idx = {2, 0};
  expect_values(ops::gather_rows(x, idx, 2), {20, 21, 0, 1});
}

TEST(TransposeReshape, RoundTrip) {
  Rng rng(4);
  const Tensor x = check::random_constant({2, 3, 4}, rng);
  const Tensor t = ops::transpose(ops::transpose(x, 0, 2), 0, 2);
  expect_values(t, std::vector<double>(x.data().begin(), x.data().end()));
  EXPECT_THROW(ops::reshape(x, {5, 5}), ShapeError);
  EXPECT_EQ(ops::sum_axis(x, 1).shape(), (Shape{2, 4}));
}

// Every primitive, loss and end-to-end model case against central
// differences; one expectation per case.
TEST(GradientSuite, AllCasesMatchFiniteDifferences) {
  const auto results = check::gradient_suite(20261015);
  // 18 primitives, 3 losses, 5 poolings x 3 heads, per-class head.
  EXPECT_EQ(results.size(), 37u);
  for (const auto& r : results) EXPECT_TRUE(r.passed) << r.name << ": " << r.detail;
}

}  // namespace
}  // namespace dec2enc
