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

#ifndef DEC2ENC_DATASET_HPP_
#define DEC2ENC_DATASET_HPP_

#include <string>
#include <vector>

namespace dec2enc {

enum class TaskKind { kClassification, kRegression, kRanking };

TaskKind parse_task_kind(const std::string& text);
std::string to_string(TaskKind kind);

// Classification (label holds the class id) or regression example.
struct LabeledSequence {
  std::vector<int> tokens;
  double label = 0.0;
};

struct RankingExample {
  std::vector<int> query;
  std::vector<std::vector<int>> docs;
  std::vector<double> labels;
};

// Token sequence fed to the encoder for one (query, document) pair:
// query, separator, document.
std::vector<int> join_query_doc(const std::vector<int>& query, const std::vector<int>& doc);

struct TaskData {
  TaskKind kind = TaskKind::kClassification;
  std::vector<LabeledSequence> train;
  std::vector<LabeledSequence> eval;
  std::vector<RankingExample> ranking_train;
  std::vector<RankingExample> ranking_eval;
};

// JSON lines. Classification/regression rows: {"tokens": [...], "label": n}
// (integer label for classification). Ranking rows:
// {"query": [...], "docs": [[...], ...], "labels": [...]}.
void write_sequences_jsonl(const std::string& path, const std::vector<LabeledSequence>& rows, TaskKind kind);
std::vector<LabeledSequence> read_sequences_jsonl(const std::string& path);
void write_ranking_jsonl(const std::string& path, const std::vector<RankingExample>& rows);
std::vector<RankingExample> read_ranking_jsonl(const std::string& path);

}  // namespace dec2enc

#endif  // DEC2ENC_DATASET_HPP_
