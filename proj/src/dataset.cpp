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

#include "dec2enc/dataset.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

#include "dec2enc/encoder.hpp"

namespace dec2enc {

using nlohmann::json;

TaskKind parse_task_kind(const std::string& text) {
  if (text == "classification") return TaskKind::kClassification;
  if (text == "regression") return TaskKind::kRegression;
  if (text == "ranking") return TaskKind::kRanking;
  throw std::invalid_argument("unknown task kind '" + text + "'");
}

std::string to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::kClassification: return "classification";
    case TaskKind::kRegression: return "regression";
    case TaskKind::kRanking: return "ranking";
  }
  return "";
}

std::vector<int> join_query_doc(const std::vector<int>& query, const std::vector<int>& doc) {
  std::vector<int> out = query;
  out.push_back(kSepId);
  out.insert(out.end(), doc.begin(), doc.end());
  return out;
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  return out;
}

template <class Fn>
void for_each_line(const std::string& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      fn(json::parse(line));
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

}  // namespace

void write_sequences_jsonl(const std::string& path, const std::vector<LabeledSequence>& rows, TaskKind kind) {
  auto out = open_out(path);
  for (const auto& r : rows) {
    json j;
    j["tokens"] = r.tokens;
    if (kind == TaskKind::kClassification) {
      j["label"] = static_cast<long long>(std::llround(r.label));
    } else {
      j["label"] = r.label;
    }
    out << j.dump() << '\n';
  }
}

std::vector<LabeledSequence> read_sequences_jsonl(const std::string& path) {
  std::vector<LabeledSequence> rows;
  for_each_line(path, [&](const json& j) {
    rows.push_back(LabeledSequence{j.at("tokens").get<std::vector<int>>(), j.at("label").get<double>()});
  });
  return rows;
}

void write_ranking_jsonl(const std::string& path, const std::vector<RankingExample>& rows) {
  auto out = open_out(path);
  for (const auto& r : rows) {
    json j;
    j["query"] = r.query;
    j["docs"] = r.docs;
    j["labels"] = r.labels;
    out << j.dump() << '\n';
  }
}

std::vector<RankingExample> read_ranking_jsonl(const std::string& path) {
  std::vector<RankingExample> rows;
  for_each_line(path, [&](const json& j) {
    RankingExample r;
    r.query = j.at("query").get<std::vector<int>>();
    r.docs = j.at("docs").get<std::vector<std::vector<int>>>();
    r.labels = j.at("labels").get<std::vector<double>>();
    if (r.docs.size() != r.labels.size()) throw std::invalid_argument("docs and labels differ in length");
    rows.push_back(std::move(r));
  });
  return rows;
}

}  // namespace dec2enc
