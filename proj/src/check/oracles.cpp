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

#include "dec2enc/check/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace dec2enc::check {

namespace {

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sa += a[i];
    sb += b[i];
  }
  const double ma = sa / n, mb = sb / n;
  for (std::size_t i = 0; i < a.size(); ++i) {
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
    sab += (a[i] - ma) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa) / std::sqrt(sbb);
}

double dcg_of_order(const std::vector<std::size_t>& order, const std::vector<double>& labels, std::size_t k) {
  double total = 0.0;
  for (std::size_t pos = 0; pos < order.size() && pos < k; ++pos) {
    total += (std::pow(2.0, labels[order[pos]]) - 1.0) / std::log2(static_cast<double>(pos) + 2.0);
  }
  return total;
}

}  // namespace

double naive_listwise_softmax(const std::vector<std::vector<double>>& labels,
                              const std::vector<std::vector<double>>& scores) {
  double total = 0.0;
  for (std::size_t b = 0; b < scores.size(); ++b) {
    const double top = *std::max_element(scores[b].begin(), scores[b].end());
    double z = 0.0;
    for (double s : scores[b]) z += std::exp(s - top);
    const double log_z = top + std::log(z);
    for (std::size_t j = 0; j < scores[b].size(); ++j) total -= labels[b][j] * (scores[b][j] - log_z);
  }
  return total / static_cast<double>(scores.size());
}

double naive_f1(const std::vector<int>& preds, const std::vector<int>& labels) {
  double tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    tp += preds[i] == 1 && labels[i] == 1;
    fp += preds[i] == 1 && labels[i] != 1;
    fn += preds[i] != 1 && labels[i] == 1;
  }
  if (tp == 0.0) return 0.0;
  return 2.0 * tp / (2.0 * tp + fp + fn);
}

double naive_matthews(const std::vector<int>& preds, const std::vector<int>& labels) {
  std::vector<double> p, l;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    p.push_back(preds[i] == 1 ? 1.0 : 0.0);
    l.push_back(labels[i] == 1 ? 1.0 : 0.0);
  }
  return pearson(p, l);
}

double naive_spearman(const std::vector<double>& x, const std::vector<double>& y) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      double below = 0, tied = 0;
      for (std::size_t j = 0; j < v.size(); ++j) {
        if (v[j] < v[i]) below += 1;
        else if (v[j] == v[i] && j != i) tied += 1;
      }
      r[i] = 1.0 + below + tied / 2.0;
    }
    return r;
  };
  return pearson(ranks(x), ranks(y));
}

std::size_t naive_rank(const std::vector<double>& scores, std::size_t i) {
  std::size_t ahead = 0;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (scores[j] > scores[i] || (scores[j] == scores[i] && j < i)) ++ahead;
  }
  return ahead + 1;
}

double naive_reciprocal_rank(const std::vector<double>& scores, const std::vector<double>& labels, std::size_t k) {
  std::size_t best = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] > 0.0) {
      const std::size_t r = naive_rank(scores, i);
      if (best == 0 || r < best) best = r;
    }
  }
  return best != 0 && best <= k ? 1.0 / static_cast<double>(best) : 0.0;
}

std::optional<double> naive_ndcg(const std::vector<double>& scores, const std::vector<double>& labels, std::size_t k) {
  if (labels.size() > 9) throw std::invalid_argument("naive_ndcg: list too long for exhaustive search");
  std::vector<std::size_t> order(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) order[naive_rank(scores, i) - 1] = i;
  const double dcg = dcg_of_order(order, labels, k);

  std::vector<std::size_t> perm(labels.size());
  std::iota(perm.begin(), perm.end(), 0);
  double ideal = 0.0;
  do {
    ideal = std::max(ideal, dcg_of_order(perm, labels, k));
  } while (std::next_permutation(perm.begin(), perm.end()));
  if (ideal <= 0.0) return std::nullopt;
  return dcg / ideal;
}

}  // namespace dec2enc::check
