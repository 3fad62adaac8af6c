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

#ifndef DEC2ENC_SYNTHETIC_HPP_
#define DEC2ENC_SYNTHETIC_HPP_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "dec2enc/dataset.hpp"

namespace dec2enc {

struct SyntheticTaskSpec {
  std::string name = "cue-recall";  // cue-recall | count-regression | overlap-ranking
  std::size_t min_len = 8;
  std::size_t max_len = 16;
  std::size_t vocab = 260;  // total vocabulary, reserved ids included
  std::size_t n_train = 2000;
  std::size_t n_eval = 500;

  // cue-recall
  std::size_t n_classes = 4;
  // Draw non-cue slots so every class occurs equally often instead of
  // uniformly over the content vocabulary.
  bool balanced_distractors = false;

  // overlap-ranking
  std::size_t list_size = 8;
  std::size_t query_len = 3;
  std::size_t doc_len = 8;
  // Probability that the positive document misses one query token.
  double noise = 0.0;

  void validate() const;
};

// Class of a content token for cue-recall.
int cue_class(int token, std::size_t n_classes);

// label = class of the token right after the single cue token; the cue sits
// uniformly in [len/2, len-2].
void gen_cue_recall(const SyntheticTaskSpec& spec, std::uint64_t seed, std::vector<LabeledSequence>& train,
                    std::vector<LabeledSequence>& eval);

// target = (# marker tokens) / length.
void gen_count_regression(const SyntheticTaskSpec& spec, std::uint64_t seed, std::vector<LabeledSequence>& train,
                          std::vector<LabeledSequence>& eval);

// One positive doc containing every query token, list_size-1 negatives with
// partial or no overlap, binary labels, docs shuffled.
void gen_overlap_ranking(const SyntheticTaskSpec& spec, std::uint64_t seed, std::vector<RankingExample>& train,
                         std::vector<RankingExample>& eval);

TaskData generate_task(const SyntheticTaskSpec& spec, std::uint64_t seed);
TaskKind task_kind_for(const std::string& generator_name);

}  // namespace dec2enc

#endif  // DEC2ENC_SYNTHETIC_HPP_
