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

#ifndef DEC2ENC_CHECK_ORACLES_HPP_
#define DEC2ENC_CHECK_ORACLES_HPP_

#include <cstddef>
#include <optional>
#include <vector>

// Deliberately naive reference implementations, written independently of
// the library code they are compared against.
namespace dec2enc::check {

// Mean over lists of -sum_j y_j (s_j - log sum_k exp s_k).
double naive_listwise_softmax(const std::vector<std::vector<double>>& labels,
                              const std::vector<std::vector<double>>& scores);

// 2TP / (2TP + FP + FN), 0 when there are no positives at all.
double naive_f1(const std::vector<int>& preds, const std::vector<int>& labels);

// Pearson correlation of the 0/1 indicator vectors; 0 if either is constant.
double naive_matthews(const std::vector<int>& preds, const std::vector<int>& labels);

// Pearson correlation of ranks obtained by pairwise counting.
double naive_spearman(const std::vector<double>& x, const std::vector<double>& y);

// Position of document i when sorting by descending score, ties broken by
// original index.
std::size_t naive_rank(const std::vector<double>& scores, std::size_t i);

double naive_reciprocal_rank(const std::vector<double>& scores, const std::vector<double>& labels, std::size_t k);

// Ideal DCG by exhaustive search over permutations; keep lists short.
std::optional<double> naive_ndcg(const std::vector<double>& scores, const std::vector<double>& labels, std::size_t k);

}  // namespace dec2enc::check

#endif  // DEC2ENC_CHECK_ORACLES_HPP_
