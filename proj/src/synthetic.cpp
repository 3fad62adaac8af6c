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

#include "dec2enc/synthetic.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "dec2enc/encoder.hpp"
#include "dec2enc/rng.hpp"

namespace dec2enc {

namespace {

std::size_t content_tokens(const SyntheticTaskSpec& spec) { return spec.vocab - kFirstContentId; }

int random_content(Rng& rng, const SyntheticTaskSpec& spec) {
  return kFirstContentId + static_cast<int>(rng.index(content_tokens(spec)));
}

std::string key_of(const std::vector<int>& tokens) {
  return std::string(reinterpret_cast<const char*>(tokens.data()), tokens.size() * sizeof(int));
}

std::string key_of(const RankingExample& ex) {
  std::string k = key_of(ex.query);
  for (const auto& d : ex.docs) {
    k += '|';
    k += key_of(d);
  }
  return k;
}

std::string key_of_example(const LabeledSequence& ex) { return key_of(ex.tokens); }
std::string key_of_example(const RankingExample& ex) { return key_of(ex); }

// Candidate i is drawn from its own stream and routed by a hash of its
// content, so identical content always lands in the same split and the two
// splits are disjoint.
template <class Example, class Gen>
void hash_partition(std::size_t n_train, std::size_t n_eval, std::uint64_t seed, Gen&& gen,
                    std::vector<Example>& train, std::vector<Example>& eval) {
  train.clear();
  eval.clear();
  const std::size_t budget = 50 * (n_train + n_eval) + 1000;
  for (std::size_t i = 0; i < budget && (train.size() < n_train || eval.size() < n_eval); ++i) {
    Rng rng(combine_seed(seed, i));
    Example ex = gen(rng);
    const bool to_eval = fnv1a64(key_of_example(ex)) % 5 == 0;
    if (to_eval && eval.size() < n_eval) eval.push_back(std::move(ex));
    else if (!to_eval && train.size() < n_train) train.push_back(std::move(ex));
  }
  if (train.size() < n_train || eval.size() < n_eval) {
    throw std::runtime_error("synthetic generator could not fill the requested splits");
  }
}

}  // namespace

void SyntheticTaskSpec::validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument("SyntheticTaskSpec: " + m); };
  if (name != "cue-recall" && name != "count-regression" && name != "overlap-ranking") {
    fail("unknown generator '" + name + "'");
  }
  if (vocab <= static_cast<std::size_t>(kFirstContentId) + 1) fail("vocab leaves no content tokens");
  if (n_train == 0 || n_eval == 0) fail("n_train and n_eval must be positive");
  if (name == "cue-recall" || name == "count-regression") {
    if (min_len < 3 || max_len < min_len) fail("need 3 <= min_len <= max_len");
  }
  if (name == "cue-recall") {
    if (n_classes < 2) fail("n_classes must be >= 2");
    if (content_tokens(*this) < n_classes) fail("fewer content tokens than classes");
  }
  if (name == "overlap-ranking") {
    if (list_size < 2) fail("list_size must be >= 2");
    if (query_len == 0 || doc_len < query_len) fail("need 1 <= query_len <= doc_len");
    if (content_tokens(*this) < query_len + doc_len) fail("vocab too small for ranking docs");
    if (!(noise >= 0.0 && noise <= 1.0)) fail("noise outside [0, 1]");
  }
}

int cue_class(int token, std::size_t n_classes) {
  return (token - kFirstContentId) % static_cast<int>(n_classes);
}

void gen_cue_recall(const SyntheticTaskSpec& spec, std::uint64_t seed, std::vector<LabeledSequence>& train,
                    std::vector<LabeledSequence>& eval) {
  spec.validate();
  const std::size_t classes = spec.n_classes;
  const std::size_t per_class = content_tokens(spec) / classes;  // tokens usable for every class
  auto token_of_class = [&](Rng& rng, std::size_t c) {
    return kFirstContentId + static_cast<int>(c + classes * rng.index(per_class));
  };
  auto gen = [&](Rng& rng) {
    const std::size_t len = static_cast<std::size_t>(
        rng.uniform_int(static_cast<std::int64_t>(spec.min_len), static_cast<std::int64_t>(spec.max_len)));
    const std::size_t cue = static_cast<std::size_t>(
        rng.uniform_int(static_cast<std::int64_t>(len / 2), static_cast<std::int64_t>(len - 2)));
    std::vector<int> tokens(len);
    if (spec.balanced_distractors) {
      std::vector<std::size_t> slot_classes;
      const std::size_t slots = len - 1;
      for (std::size_t c = 0; c < classes; ++c) {
        for (std::size_t j = 0; j < slots / classes; ++j) slot_classes.push_back(c);
      }
      std::vector<std::size_t> extra(classes);
      for (std::size_t c = 0; c < classes; ++c) extra[c] = c;
      rng.shuffle(extra.begin(), extra.end());
      for (std::size_t j = 0; j < slots % classes; ++j) slot_classes.push_back(extra[j]);
      rng.shuffle(slot_classes.begin(), slot_classes.end());
      std::size_t next = 0;
      for (std::size_t p = 0; p < len; ++p) {
        tokens[p] = p == cue ? kCueId : token_of_class(rng, slot_classes[next++]);
      }
    } else {
      for (std::size_t p = 0; p < len; ++p) tokens[p] = p == cue ? kCueId : random_content(rng, spec);
    }
    return LabeledSequence{tokens, static_cast<double>(cue_class(tokens[cue + 1], classes))};
  };
  hash_partition(spec.n_train, spec.n_eval, combine_seed(seed, 0xc0e), gen, train, eval);
}

void gen_count_regression(const SyntheticTaskSpec& spec, std::uint64_t seed, std::vector<LabeledSequence>& train,
                          std::vector<LabeledSequence>& eval) {
  spec.validate();
  auto gen = [&](Rng& rng) {
    const std::size_t len = static_cast<std::size_t>(
        rng.uniform_int(static_cast<std::int64_t>(spec.min_len), static_cast<std::int64_t>(spec.max_len)));
    const double rate = rng.uniform();
    std::vector<int> tokens(len);
    std::size_t markers = 0;
    for (auto& t : tokens) {
      if (rng.uniform() < rate) {
        t = kMarkerId;
        ++markers;
      } else {
        t = random_content(rng, spec);
      }
    }
    return LabeledSequence{tokens, static_cast<double>(markers) / static_cast<double>(len)};
  };
  hash_partition(spec.n_train, spec.n_eval, combine_seed(seed, 0xc047), gen, train, eval);
}

void gen_overlap_ranking(const SyntheticTaskSpec& spec, std::uint64_t seed, std::vector<RankingExample>& train,
                         std::vector<RankingExample>& eval) {
  spec.validate();
  auto gen = [&](Rng& rng) {
    // Query: distinct content tokens.
    std::vector<int> pool(content_tokens(spec));
    for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = kFirstContentId + static_cast<int>(i);
    rng.shuffle(pool.begin(), pool.end());
    RankingExample ex;
    ex.query.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(spec.query_len));
    const std::vector<int> fillers(pool.begin() + static_cast<std::ptrdiff_t>(spec.query_len), pool.end());

    auto make_doc = [&](std::size_t overlap) {
      std::vector<int> included = ex.query;
      rng.shuffle(included.begin(), included.end());
      included.resize(overlap);
      std::vector<int> doc(spec.doc_len);
      for (auto& t : doc) t = fillers[rng.index(fillers.size())];
      std::vector<std::size_t> slots(spec.doc_len);
      for (std::size_t i = 0; i < slots.size(); ++i) slots[i] = i;
      rng.shuffle(slots.begin(), slots.end());
      for (std::size_t i = 0; i < overlap; ++i) doc[slots[i]] = included[i];
      return doc;
    };

    std::size_t positive_overlap = spec.query_len;
    if (spec.noise > 0.0 && rng.uniform() < spec.noise) positive_overlap -= 1;
    std::vector<std::pair<std::vector<int>, double>> docs;
    docs.emplace_back(make_doc(positive_overlap), 1.0);
    for (std::size_t j = 1; j < spec.list_size; ++j) {
      const std::size_t overlap = rng.index(spec.query_len);  // 0 .. query_len-1
      docs.emplace_back(make_doc(overlap), 0.0);
    }
    rng.shuffle(docs.begin(), docs.end());
    for (auto& [doc, label] : docs) {
      ex.docs.push_back(std::move(doc));
      ex.labels.push_back(label);
    }
    return ex;
  };
  hash_partition(spec.n_train, spec.n_eval, combine_seed(seed, 0x4a4b), gen, train, eval);
}

TaskKind task_kind_for(const std::string& generator_name) {
  if (generator_name == "cue-recall") return TaskKind::kClassification;
  if (generator_name == "count-regression") return TaskKind::kRegression;
  if (generator_name == "overlap-ranking") return TaskKind::kRanking;
  throw std::invalid_argument("unknown generator '" + generator_name + "'");
}

TaskData generate_task(const SyntheticTaskSpec& spec, std::uint64_t seed) {
  TaskData data;
  data.kind = task_kind_for(spec.name);
  if (spec.name == "cue-recall") gen_cue_recall(spec, seed, data.train, data.eval);
  else if (spec.name == "count-regression") gen_count_regression(spec, seed, data.train, data.eval);
  else gen_overlap_ranking(spec, seed, data.ranking_train, data.ranking_eval);
  return data;
}

}  // namespace dec2enc
