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

#ifndef DEC2ENC_METRICS_HPP_
#define DEC2ENC_METRICS_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dec2enc {

struct MetricReport {
  std::string name;
  double value = 0.0;
  std::size_t support = 0;
};

double accuracy(std::span<const int> preds, std::span<const int> labels);

// Positive class is 1. Degenerate denominators give 0.
double f1_binary(std::span<const int> preds, std::span<const int> labels);
double matthews_corr(std::span<const int> preds, std::span<const int> labels);

// 1-based ranks; tied values share the average of the ranks they span.
std::vector<double> average_ranks(std::span<const double> values);
// Pearson correlation of average ranks. 0 if either side is constant.
double spearman_corr(std::span<const double> x, std::span<const double> y);

// Labels reordered by descending score; ties keep their original order.
std::vector<double> rank_by_scores(std::span<const double> scores, std::span<const double> labels);

// Single ranked list; a label > 0 counts as relevant.
double reciprocal_rank_at_k(std::span<const double> ranked_labels, std::size_t k);
// Gain 2^rel - 1, discount log2(pos + 1). nullopt when the list has no
// positive label.
std::optional<double> ndcg_at_k(std::span<const double> ranked_labels, std::size_t k);

// Means over queries. NDCG skips queries without positives.
double mrr_at_k(const std::vector<std::vector<double>>& ranked_lists, std::size_t k);
double mean_ndcg_at_k(const std::vector<std::vector<double>>& ranked_lists, std::size_t k);

}  // namespace dec2enc

#endif  // DEC2ENC_METRICS_HPP_
