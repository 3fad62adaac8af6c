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
#include <cmath>
#include <numeric>

#include "dec2enc/check/oracles.hpp"
#include "dec2enc/check/selftest.hpp"
#include "dec2enc/metrics.hpp"
#include "dec2enc/rng.hpp"

namespace dec2enc {
namespace {

using V = std::vector<double>;
using I = std::vector<int>;

TEST(Accuracy, Examples) {
  EXPECT_EQ(accuracy(I{1, 0, 1}, I{1, 0, 1}), 1.0);
  EXPECT_EQ(accuracy(I{0, 1}, I{1, 0}), 0.0);
  EXPECT_DOUBLE_EQ(accuracy(I{1, 0, 1}, I{1, 1, 1}), 2.0 / 3.0);
  EXPECT_THROW(accuracy(I{1}, I{1, 0}), std::invalid_argument);
  EXPECT_THROW(accuracy(I{}, I{}), std::invalid_argument);
}

TEST(F1, Examples) {
  EXPECT_EQ(f1_binary(I{1, 0, 1}, I{1, 0, 1}), 1.0);
  EXPECT_EQ(f1_binary(I{0, 0, 0}, I{1, 0, 1}), 0.0);
  // TP=1, FP=1, FN=1
  EXPECT_DOUBLE_EQ(f1_binary(I{1, 1, 0}, I{1, 0, 1}), 0.5);
}

TEST(Matthews, Examples) {
  EXPECT_DOUBLE_EQ(matthews_corr(I{1, 0, 1, 0}, I{1, 0, 1, 0}), 1.0);
  EXPECT_DOUBLE_EQ(matthews_corr(I{0, 1, 0, 1}, I{1, 0, 1, 0}), -1.0);
  // TP=TN=FP=FN=1
  EXPECT_DOUBLE_EQ(matthews_corr(I{1, 0, 1, 0}, I{1, 0, 0, 1}), 0.0);
  EXPECT_EQ(matthews_corr(I{1, 1, 1}, I{1, 0, 1}), 0.0);
}

TEST(Spearman, Examples) {
  EXPECT_DOUBLE_EQ(spearman_corr(V{1, 2, 3, 4}, V{1, 2, 3, 4}), 1.0);
  EXPECT_DOUBLE_EQ(spearman_corr(V{1, 2, 3, 4}, V{4, 3, 2, 1}), -1.0);
  EXPECT_DOUBLE_EQ(spearman_corr(V{1, 2, 3}, V{1, 3, 2}), 0.5);
  EXPECT_EQ(average_ranks(V{10, 20, 10}), (V{1.5, 3, 1.5}));
  EXPECT_EQ(spearman_corr(V{1, 1, 1}, V{1, 2, 3}), 0.0);
}

TEST(Mrr, Examples) {
  EXPECT_EQ(mrr_at_k({V{1, 0, 0}}, 10), 1.0);
  EXPECT_EQ(mrr_at_k({V{0, 1, 0}}, 10), 0.5);
  EXPECT_EQ(mrr_at_k({V{0, 0, 1}}, 2), 0.0);
  EXPECT_DOUBLE_EQ(mrr_at_k({V{1, 0}, V{0, 1}}, 10), 0.75);
  EXPECT_THROW(mrr_at_k({}, 10), std::invalid_argument);
}

TEST(Ndcg, Examples) {
  EXPECT_DOUBLE_EQ(*ndcg_at_k(V{2, 1, 0}, 3), 1.0);
  EXPECT_NEAR(*ndcg_at_k(V{0, 1}, 2), 1.0 / std::log2(3.0), 1e-15);
  EXPECT_NEAR(*ndcg_at_k(V{0, 1}, 2), 0.6309, 1e-4);
  EXPECT_FALSE(ndcg_at_k(V{0, 0}, 2).has_value());
  // Lists without a positive are skipped in the mean.
  EXPECT_DOUBLE_EQ(mean_ndcg_at_k({V{1, 0}, V{0, 0}}, 10), 1.0);
}

TEST(Ndcg, NeverExceedsOne) {
  Rng rng(1);
  for (int t = 0; t < 10000; ++t) {
    V labels(1 + rng.index(8));
    for (auto& l : labels) l = static_cast<double>(rng.index(4));
    rng.shuffle(labels.begin(), labels.end());
    if (auto v = ndcg_at_k(labels, 1 + rng.index(10))) {
      EXPECT_LE(*v, 1.0 + 1e-15);
      EXPECT_GE(*v, 0.0);
    }
  }
}

TEST(RankByScores, OrderAndTies) {
  EXPECT_EQ(rank_by_scores(V{0.1, 0.9, 0.5}, V{1, 2, 3}), (V{2, 3, 1}));
  EXPECT_EQ(rank_by_scores(V{1, 1, 1}, V{1, 2, 3}), (V{1, 2, 3}));
  Rng rng(2);
  for (int t = 0; t < 200; ++t) {
    V s(1 + rng.index(10)), l(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      s[i] = static_cast<double>(rng.index(4));
      l[i] = static_cast<double>(i);
    }
    std::vector<std::size_t> idx(s.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return s[a] > s[b]; });
    const V ranked = rank_by_scores(s, l);
    for (std::size_t i = 0; i < idx.size(); ++i) EXPECT_EQ(ranked[i], l[idx[i]]);
  }
}

TEST(RankingProperties, MrrMonotoneInCutoffAndDcgToo) {
  Rng rng(3);
  for (int t = 0; t < 2000; ++t) {
    V labels(1 + rng.index(9));
    for (auto& l : labels) l = static_cast<double>(rng.index(3));
    for (std::size_t k = 1; k <= labels.size(); ++k) {
      EXPECT_LE(reciprocal_rank_at_k(labels, k), reciprocal_rank_at_k(labels, k + 1));
    }
  }
}

TEST(RankingProperties, NdcgIsNotMonotoneInCutoff) {
  // A relevant item beyond the cutoff raises the ideal DCG faster than the
  // achieved DCG.
  const V ranked = {1, 0, 1};
  EXPECT_DOUBLE_EQ(*ndcg_at_k(ranked, 1), 1.0);
  EXPECT_LT(*ndcg_at_k(ranked, 3), *ndcg_at_k(ranked, 1));
}

TEST(RankingProperties, PromotingRelevantItemNeverHurts) {
  Rng rng(4);
  for (int t = 0; t < 2000; ++t) {
    V labels(2 + rng.index(8));
    for (auto& l : labels) l = static_cast<double>(rng.index(3));
    const std::size_t i = 1 + rng.index(labels.size() - 1);
    if (labels[i] <= labels[i - 1]) continue;
    V swapped = labels;
    std::swap(swapped[i], swapped[i - 1]);
    const std::size_t k = 1 + rng.index(labels.size());
    EXPECT_GE(reciprocal_rank_at_k(swapped, k), reciprocal_rank_at_k(labels, k));
    EXPECT_GE(ndcg_at_k(swapped, k).value(), ndcg_at_k(labels, k).value() - 1e-15);
  }
}

TEST(RankingProperties, InvariantToMonotoneScoreTransform) {
  Rng rng(5);
  for (int t = 0; t < 500; ++t) {
    V s(1 + rng.index(9)), l(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      s[i] = rng.normal();
      l[i] = static_cast<double>(rng.index(2));
    }
    V transformed = s;
    for (auto& x : transformed) x = std::exp(3.0 * x) - 7.0;
    EXPECT_EQ(rank_by_scores(s, l), rank_by_scores(transformed, l));
  }
}

TEST(Oracles, BruteForceAgreementOnLargerInputs) {
  Rng rng(6);
  for (int t = 0; t < 300; ++t) {
    const std::size_t n = 1 + rng.index(64);
    I p(n), y(n);
    V x(n), z(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = static_cast<int>(rng.index(2));
      y[i] = static_cast<int>(rng.index(2));
      x[i] = static_cast<double>(rng.index(10));
      z[i] = rng.normal();
    }
    EXPECT_NEAR(f1_binary(p, y), check::naive_f1(p, y), 1e-12);
    EXPECT_NEAR(matthews_corr(p, y), check::naive_matthews(p, y), 1e-12);
    EXPECT_NEAR(spearman_corr(x, z), check::naive_spearman(x, z), 1e-12);
    const std::size_t k = 1 + rng.index(n + 2);
    EXPECT_NEAR(reciprocal_rank_at_k(rank_by_scores(z, x), k), check::naive_reciprocal_rank(z, x, k), 1e-12);
  }
}

TEST(Oracles, Suite) {
  for (const auto& r : check::oracle_suite(99)) EXPECT_TRUE(r.passed) << r.name << ": " << r.detail;
}

}  // namespace
}  // namespace dec2enc
