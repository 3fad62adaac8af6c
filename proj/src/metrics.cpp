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

#include "dec2enc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace dec2enc {

namespace {

void check_same_size(std::size_t a, std::size_t b, const char* fn) {
  if (a != b) {
    throw std::invalid_argument(std::string(fn) + ": size mismatch " + std::to_string(a) + " vs " +
                                std::to_string(b));
  }
  if (a == 0) throw std::invalid_argument(std::string(fn) + ": empty input");
}

struct Confusion {
  double tp = 0, tn = 0, fp = 0, fn = 0;
};

Confusion confusion(std::span<const int> preds, std::span<const int> labels, const char* fn) {
  check_same_size(preds.size(), labels.size(), fn);
  Confusion c;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const bool p = preds[i] == 1;
    const bool l = labels[i] == 1;
    if (p && l) c.tp += 1;
    else if (p) c.fp += 1;
    else if (l) c.fn += 1;
    else c.tn += 1;
  }
  return c;
}

}  // namespace

double accuracy(std::span<const int> preds, std::span<const int> labels) {
  check_same_size(preds.size(), labels.size(), "accuracy");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) hits += preds[i] == labels[i];
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

double f1_binary(std::span<const int> preds, std::span<const int> labels) {
  const Confusion c = confusion(preds, labels, "f1_binary");
  const double precision = c.tp + c.fp > 0 ? c.tp / (c.tp + c.fp) : 0.0;
  const double recall = c.tp + c.fn > 0 ? c.tp / (c.tp + c.fn) : 0.0;
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

double matthews_corr(std::span<const int> preds, std::span<const int> labels) {
  const Confusion c = confusion(preds, labels, "matthews_corr");
  const double denom = (c.tp + c.fp) * (c.tp + c.fn) * (c.tn + c.fp) * (c.tn + c.fn);
  if (denom == 0.0) return 0.0;
  return (c.tp * c.tn - c.fp * c.fn) / std::sqrt(denom);
}

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
    i = j + 1;
  }
  return ranks;
}

double spearman_corr(std::span<const double> x, std::span<const double> y) {
  check_same_size(x.size(), y.size(), "spearman_corr");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

std::vector<double> rank_by_scores(std::span<const double> scores, std::span<const double> labels) {
  check_same_size(scores.size(), labels.size(), "rank_by_scores");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<double> ranked;
  ranked.reserve(order.size());
  for (std::size_t i : order) ranked.push_back(labels[i]);
  return ranked;
}

double reciprocal_rank_at_k(std::span<const double> ranked_labels, std::size_t k) {
  const std::size_t limit = std::min(k, ranked_labels.size());
  for (std::size_t i = 0; i < limit; ++i) {
    if (ranked_labels[i] > 0.0) return 1.0 / static_cast<double>(i + 1);
  }
  return 0.0;
}

std::optional<double> ndcg_at_k(std::span<const double> ranked_labels, std::size_t k) {
  auto dcg = [k](std::span<const double> labels) {
    double total = 0.0;
    const std::size_t limit = std::min(k, labels.size());
    for (std::size_t i = 0; i < limit; ++i) {
      total += (std::exp2(labels[i]) - 1.0) / std::log2(static_cast<double>(i) + 2.0);
    }
    return total;
  };
  std::vector<double> ideal(ranked_labels.begin(), ranked_labels.end());
  std::sort(ideal.begin(), ideal.end(), std::greater<>());
  if (ideal.empty() || ideal.front() <= 0.0) return std::nullopt;
  const double idcg = dcg(ideal);
  if (idcg <= 0.0) return std::nullopt;
  return dcg(ranked_labels) / idcg;
}

double mrr_at_k(const std::vector<std::vector<double>>& ranked_lists, std::size_t k) {
  if (ranked_lists.empty()) throw std::invalid_argument("mrr_at_k: no queries");
  double total = 0.0;
  for (const auto& list : ranked_lists) total += reciprocal_rank_at_k(list, k);
  return total / static_cast<double>(ranked_lists.size());
}

double mean_ndcg_at_k(const std::vector<std::vector<double>>& ranked_lists, std::size_t k) {
  double total = 0.0;
  std::size_t counted = 0;
  for (const auto& list : ranked_lists) {
    if (auto v = ndcg_at_k(list, k)) {
      total += *v;
      ++counted;
    }
  }
  return counted == 0 ? 0.0 : total / static_cast<double>(counted);
}

}  // namespace dec2enc
