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

#ifndef DEC2ENC_EXPERIMENT_HPP_
#define DEC2ENC_EXPERIMENT_HPP_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "dec2enc/dataset.hpp"
#include "dec2enc/metrics.hpp"
#include "dec2enc/synthetic.hpp"
#include "dec2enc/tasks.hpp"

namespace dec2enc {

struct AblationSpec {
  std::string axis;  // pooling | mask_mode | dropout | padding_side | pooler_capacity
  std::vector<nlohmann::json> values;
};

// JSONL files used instead of the synthetic generator.
struct DataPaths {
  std::string train;
  std::string eval;
};

struct ExperimentConfig {
  ModelSpec model;
  TrainConfig train;
  SyntheticTaskSpec task;
  std::optional<DataPaths> data;
  std::size_t repeats = 3;
  std::string output_csv = "ablation.csv";
  std::uint64_t seed = 0;
  std::optional<AblationSpec> ablation;

  void validate() const;
};

// Top-level keys: model, train, task, data, repeats, output_csv, seed,
// ablation {axis, values}.
ExperimentConfig experiment_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& config);
ExperimentConfig load_experiment(const std::string& path);

// 16 hex digits of FNV-1a over the canonical JSON dump, ablation excluded.
std::string config_hash(const ExperimentConfig& config);

// Returns a copy with one axis replaced; dropout sets both rates,
// pooler_capacity takes {"heads": H, "latents": V}.
ExperimentConfig apply_axis(const ExperimentConfig& base, const std::string& axis, const nlohmann::json& value);
std::string axis_value_label(const std::string& axis, const nlohmann::json& value);

// The dataset is fixed by the experiment seed; repeats vary init, dropout
// and batch order only.
TaskData load_task_data(const ExperimentConfig& config);
std::uint64_t repeat_seed(std::uint64_t seed, std::size_t repeat);

struct RunOutcome {
  Model model;
  TrainResult result;
  std::vector<MetricReport> metrics;
};

RunOutcome run_single(const ExperimentConfig& config, const TaskData& data, std::size_t repeat);

struct RunRecord {
  std::string run_id;
  std::string axis;
  std::string axis_value;
  std::vector<MetricReport> metrics;
};

// Raised when one grid cell fails; what() carries the cell's config.
class GridError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One record per (value, repeat) in value order, then repeat order, each
// value followed by a "<hash>-mean" record averaging its repeats.
// Cells run on up to `threads` workers; output does not depend on it.
std::vector<RunRecord> run_ablation(const ExperimentConfig& base, const AblationSpec& ablation, std::size_t threads);

// Worker count from DEC2ENC_THREADS, default 1.
std::size_t threads_from_env();

// Header: run_id,axis,axis_value,metric,value,support
void write_csv(std::ostream& out, const std::vector<RunRecord>& records);
void write_csv_file(const std::string& path, const std::vector<RunRecord>& records);

}  // namespace dec2enc

#endif  // DEC2ENC_EXPERIMENT_HPP_
