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

#include "dec2enc/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <thread>

#include "dec2enc/config_io.hpp"
#include "dec2enc/rng.hpp"

namespace dec2enc {

using nlohmann::json;

namespace {

const std::vector<std::string>& known_axes() {
  static const std::vector<std::string> axes = {"pooling", "mask_mode", "dropout", "padding_side", "pooler_capacity"};
  return axes;
}

}  // namespace

void ExperimentConfig::validate() const {
  model.validate();
  task.validate();
  if (repeats == 0) throw std::invalid_argument("experiment: repeats must be >= 1");
  if (train.batch_size == 0) throw std::invalid_argument("experiment: batch_size must be >= 1");
  if (!data && task_kind_for(task.name) != model.task.kind) {
    throw std::invalid_argument("experiment: task '" + task.name + "' does not match head kind '" +
                                to_string(model.task.kind) + "'");
  }
  if (ablation) {
    if (std::find(known_axes().begin(), known_axes().end(), ablation->axis) == known_axes().end()) {
      throw std::invalid_argument("experiment: unknown ablation axis '" + ablation->axis + "'");
    }
    if (ablation->values.empty()) throw std::invalid_argument("experiment: ablation needs at least one value");
    for (const auto& v : ablation->values) apply_axis(*this, ablation->axis, v).model.validate();
  }
}

ExperimentConfig experiment_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("experiment: expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    static const std::vector<std::string> allowed = {"model", "train", "task", "data", "repeats",
                                                     "output_csv", "seed", "ablation"};
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw std::invalid_argument("experiment: unknown key '" + key + "'");
    }
  }
  ExperimentConfig c;
  if (j.contains("model")) c.model = model_spec_from_json(j.at("model"));
  if (j.contains("train")) c.train = train_config_from_json(j.at("train"));
  if (j.contains("task")) c.task = synthetic_spec_from_json(j.at("task"));
  if (j.contains("data")) c.data = DataPaths{j.at("data").at("train").get<std::string>(),
                                             j.at("data").at("eval").get<std::string>()};
  if (j.contains("repeats")) c.repeats = j.at("repeats").get<std::size_t>();
  if (j.contains("output_csv")) c.output_csv = j.at("output_csv").get<std::string>();
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("ablation")) {
    const auto& a = j.at("ablation");
    c.ablation = AblationSpec{a.at("axis").get<std::string>(), a.at("values").get<std::vector<json>>()};
  }
  c.validate();
  return c;
}

json to_json(const ExperimentConfig& c) {
  json j{{"model", to_json(c.model)},
         {"train", to_json(c.train)},
         {"task", to_json(c.task)},
         {"repeats", c.repeats},
         {"output_csv", c.output_csv},
         {"seed", c.seed}};
  if (c.data) j["data"] = json{{"train", c.data->train}, {"eval", c.data->eval}};
  if (c.ablation) j["ablation"] = json{{"axis", c.ablation->axis}, {"values", c.ablation->values}};
  return j;
}

ExperimentConfig load_experiment(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config '" + path + "'");
  try {
    return experiment_from_json(json::parse(in));
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

std::string config_hash(const ExperimentConfig& config) {
  json j = to_json(config);
  j.erase("ablation");
  j.erase("output_csv");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(j.dump())));
  return buf;
}

ExperimentConfig apply_axis(const ExperimentConfig& base, const std::string& axis, const json& value) {
  ExperimentConfig c = base;
  if (axis == "pooling") {
    c.model.pooling = parse_pooling(value.get<std::string>());
  } else if (axis == "mask_mode") {
    c.model.encoder.mask_mode = MaskMode::parse(value.get<std::string>());
  } else if (axis == "dropout") {
    const double rate = value.get<double>();
    c.model.encoder.attn_dropout = rate;
    c.model.encoder.ffn_dropout = rate;
  } else if (axis == "padding_side") {
    c.model.encoder.padding_side = parse_padding_side(value.get<std::string>());
  } else if (axis == "pooler_capacity") {
    auto* attn = std::get_if<AttentionPool>(&c.model.pooling.kind);
    if (attn == nullptr) throw std::invalid_argument("pooler_capacity axis needs an attention pooler");
    attn->heads = value.at("heads").get<std::size_t>();
    attn->latents = value.at("latents").get<std::size_t>();
  } else {
    throw std::invalid_argument("unknown ablation axis '" + axis + "'");
  }
  c.ablation.reset();
  return c;
}

std::string axis_value_label(const std::string& axis, const json& value) {
  if (axis == "pooling") return parse_pooling(value.get<std::string>()).label();
  if (axis == "mask_mode") return MaskMode::parse(value.get<std::string>()).to_string();
  if (axis == "dropout") return format_double(value.get<double>());
  if (axis == "padding_side") return to_string(parse_padding_side(value.get<std::string>()));
  if (axis == "pooler_capacity") {
    return "H" + std::to_string(value.at("heads").get<std::size_t>()) + ":V" +
           std::to_string(value.at("latents").get<std::size_t>());
  }
  throw std::invalid_argument("unknown ablation axis '" + axis + "'");
}

TaskData load_task_data(const ExperimentConfig& config) {
  if (!config.data) return generate_task(config.task, combine_seed(config.seed, 0xda7a));
  TaskData data;
  data.kind = config.model.task.kind;
  if (data.kind == TaskKind::kRanking) {
    data.ranking_train = read_ranking_jsonl(config.data->train);
    data.ranking_eval = read_ranking_jsonl(config.data->eval);
  } else {
    data.train = read_sequences_jsonl(config.data->train);
    data.eval = read_sequences_jsonl(config.data->eval);
  }
  return data;
}

std::uint64_t repeat_seed(std::uint64_t seed, std::size_t repeat) { return combine_seed(seed, 0x5eed + repeat); }

RunOutcome run_single(const ExperimentConfig& config, const TaskData& data, std::size_t repeat) {
  const std::uint64_t seed = repeat_seed(config.seed, repeat);
  ModelSpec spec = config.model;
  spec.encoder.seed = seed;
  RunOutcome out{init_model(spec, seed), {}, {}};
  out.result = train(out.model, data, config.train, seed);
  out.metrics = evaluate(out.model, data, config.train.eval_batch_size);
  return out;
}

std::vector<RunRecord> run_ablation(const ExperimentConfig& base, const AblationSpec& ablation, std::size_t threads) {
  struct Cell {
    std::size_t value_index;
    std::size_t repeat;
  };
  std::vector<ExperimentConfig> resolved;
  std::vector<std::string> hashes;
  std::vector<std::string> labels;
  for (const auto& v : ablation.values) {
    resolved.push_back(apply_axis(base, ablation.axis, v));
    resolved.back().validate();
    hashes.push_back(config_hash(resolved.back()));
    labels.push_back(axis_value_label(ablation.axis, v));
  }
  std::vector<Cell> cells;
  for (std::size_t v = 0; v < resolved.size(); ++v) {
    for (std::size_t r = 0; r < base.repeats; ++r) cells.push_back({v, r});
  }

  const TaskData data = load_task_data(base);
  std::vector<std::vector<MetricReport>> results(cells.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex error_mu;
  std::size_t error_cell = cells.size();
  std::string error_text;

  auto worker = [&] {
    while (!failed.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      try {
        results[i] = run_single(resolved[cells[i].value_index], data, cells[i].repeat).metrics;
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(error_mu);
        // Report the earliest failing cell so the message is reproducible.
        if (i < error_cell) {
          error_cell = i;
          error_text = e.what();
        }
        failed.store(true);
      }
    }
  };
  const std::size_t n_workers = std::max<std::size_t>(1, std::min(threads, cells.size()));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n_workers; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  if (failed.load()) {
    const Cell& c = cells[error_cell];
    throw GridError("ablation run failed (" + ablation.axis + "=" + labels[c.value_index] + ", repeat " +
                    std::to_string(c.repeat) + "): " + error_text +
                    "\nconfig: " + to_json(resolved[c.value_index]).dump());
  }

  std::vector<RunRecord> records;
  for (std::size_t v = 0; v < resolved.size(); ++v) {
    std::vector<MetricReport> mean;
    for (std::size_t r = 0; r < base.repeats; ++r) {
      const auto& metrics = results[v * base.repeats + r];
      records.push_back({hashes[v] + "-r" + std::to_string(r), ablation.axis, labels[v], metrics});
      if (mean.empty()) {
        mean = metrics;
        for (auto& m : mean) m.value = 0.0;
      }
      for (std::size_t k = 0; k < metrics.size(); ++k) mean[k].value += metrics[k].value;
    }
    for (auto& m : mean) m.value /= static_cast<double>(base.repeats);
    records.push_back({hashes[v] + "-mean", ablation.axis, labels[v], mean});
  }
  return records;
}

std::size_t threads_from_env() {
  const char* env = std::getenv("DEC2ENC_THREADS");
  if (env == nullptr || *env == '\0') return 1;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || n < 1) {
    throw std::invalid_argument(std::string("DEC2ENC_THREADS must be a positive integer, got '") + env + "'");
  }
  return static_cast<std::size_t>(n);
}

void write_csv(std::ostream& out, const std::vector<RunRecord>& records) {
  out << "run_id,axis,axis_value,metric,value,support\n";
  for (const auto& r : records) {
    for (const auto& m : r.metrics) {
      out << r.run_id << ',' << r.axis << ',' << r.axis_value << ',' << m.name << ',' << format_double(m.value)
          << ',' << m.support << '\n';
    }
  }
}

void write_csv_file(const std::string& path, const std::vector<RunRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_csv(out, records);
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

}  // namespace dec2enc
