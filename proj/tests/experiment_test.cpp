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

#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dec2enc/experiment.hpp"

#ifndef DEC2ENC_SOURCE_DIR
#error "DEC2ENC_SOURCE_DIR must be defined"
#endif

namespace dec2enc {
namespace {

using nlohmann::json;

ExperimentConfig smoke() { return load_experiment(std::string(DEC2ENC_SOURCE_DIR) + "/configs/smoke.json"); }

std::string csv_of(const std::vector<RunRecord>& records) {
  std::ostringstream out;
  write_csv(out, records);
  return out.str();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

TEST(ExperimentConfig, ShippedConfigsParse) {
  for (const auto& entry : std::filesystem::directory_iterator(std::string(DEC2ENC_SOURCE_DIR) + "/configs")) {
    const ExperimentConfig c = load_experiment(entry.path().string());
    EXPECT_NO_THROW(c.validate()) << entry.path();
    EXPECT_TRUE(c.ablation.has_value()) << entry.path();
  }
}

TEST(ExperimentConfig, JsonRoundTripKeepsHash) {
  const ExperimentConfig c = smoke();
  const ExperimentConfig back = experiment_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
  EXPECT_EQ(config_hash(back), config_hash(c));
  EXPECT_EQ(config_hash(c).size(), 16u);
}

TEST(ExperimentConfig, RejectsBadInput) {
  json j = to_json(smoke());
  j["learning_rate"] = 0.1;
  EXPECT_THROW(experiment_from_json(j), std::invalid_argument);
  j = to_json(smoke());
  j["model"]["encoder"]["dmodel"] = 8;
  EXPECT_THROW(experiment_from_json(j), std::invalid_argument);
  j = to_json(smoke());
  j["repeats"] = 0;
  EXPECT_THROW(experiment_from_json(j).validate(), std::invalid_argument);
  j = to_json(smoke());
  j["task"]["name"] = "count-regression";
  EXPECT_THROW(experiment_from_json(j).validate(), std::invalid_argument);
  j = to_json(smoke());
  j["ablation"]["axis"] = "learning_rate";
  EXPECT_THROW(experiment_from_json(j).validate(), std::invalid_argument);
  EXPECT_THROW(load_experiment("/nonexistent/config.json"), std::runtime_error);
}

TEST(ApplyAxis, ChangesOnlyTheNamedAxis) {
  const ExperimentConfig base = smoke();
  const json base_json = to_json(base);
  const std::vector<std::pair<std::string, json>> cases = {
      {"pooling", "mean"},
      {"mask_mode", "causal"},
      {"dropout", 0.25},
      {"padding_side", "left"},
      {"pooler_capacity", json{{"heads", 1}, {"latents", 4}}},
  };
  for (const auto& [axis, value] : cases) {
    const json changed = to_json(apply_axis(base, axis, value));
    EXPECT_FALSE(changed.contains("ablation"));
    json a = base_json, b = changed;
    a.erase("ablation");
    const json diff = json::diff(a, b);
    ASSERT_FALSE(diff.empty()) << axis;
    for (const auto& op : diff) {
      const std::string path = op["path"];
      EXPECT_EQ(path.rfind("/model/", 0), 0u) << axis << " touched " << path;
    }
  }
  ExperimentConfig mean_base = base;
  mean_base.model.pooling = PoolingSpec{MeanPool{}};
  EXPECT_THROW(apply_axis(mean_base, "pooler_capacity", json{{"heads", 1}, {"latents", 1}}), std::invalid_argument);
}

TEST(ApplyAxis, DistinctValuesGiveDistinctHashes) {
  const ExperimentConfig base = smoke();
  EXPECT_NE(config_hash(apply_axis(base, "mask_mode", "causal")),
            config_hash(apply_axis(base, "mask_mode", "bidirectional")));
  EXPECT_EQ(config_hash(apply_axis(base, "dropout", 0.1)), config_hash(apply_axis(base, "dropout", 0.1)));
}

TEST(Ablation, RowLayoutAndMeans) {
  ExperimentConfig base = smoke();
  base.train.steps = 3;
  const auto records = run_ablation(base, *base.ablation, 1);
  const std::size_t values = base.ablation->values.size();
  ASSERT_EQ(records.size(), values * (base.repeats + 1));
  for (std::size_t v = 0; v < values; ++v) {
    const RunRecord& mean = records[v * (base.repeats + 1) + base.repeats];
    EXPECT_NE(mean.run_id.find("-mean"), std::string::npos);
    for (std::size_t k = 0; k < mean.metrics.size(); ++k) {
      double sum = 0;
      for (std::size_t r = 0; r < base.repeats; ++r) {
        const RunRecord& rec = records[v * (base.repeats + 1) + r];
        EXPECT_EQ(rec.run_id, mean.run_id.substr(0, 16) + "-r" + std::to_string(r));
        EXPECT_EQ(rec.axis_value, mean.axis_value);
        sum += rec.metrics[k].value;
      }
      EXPECT_NEAR(mean.metrics[k].value, sum / base.repeats, 1e-15);
    }
  }
  const std::string csv = csv_of(records);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "run_id,axis,axis_value,metric,value,support");
}

TEST(Ablation, OutputIndependentOfThreadCount) {
  ExperimentConfig base = smoke();
  base.train.steps = 5;
  const std::string one = csv_of(run_ablation(base, *base.ablation, 1));
  EXPECT_EQ(one, csv_of(run_ablation(base, *base.ablation, 1)));
  EXPECT_EQ(one, csv_of(run_ablation(base, *base.ablation, 3)));
}

TEST(Ablation, RepeatsDifferButShareData) {
  ExperimentConfig base = smoke();
  EXPECT_NE(repeat_seed(base.seed, 0), repeat_seed(base.seed, 1));
  const TaskData a = load_task_data(base);
  const TaskData b = load_task_data(apply_axis(base, "mask_mode", "causal"));
  ASSERT_EQ(a.train.size(), b.train.size());
  for (std::size_t i = 0; i < a.train.size(); ++i) EXPECT_EQ(a.train[i].tokens, b.train[i].tokens);
}

TEST(Ablation, FailingCellReportsItsConfig) {
  ExperimentConfig base = smoke();
  base.train.steps = 2;
  AblationSpec bad{"pooling", {"mean", "first_k:12"}};  // longer than every sequence
  try {
    run_ablation(base, bad, 2);
    FAIL() << "expected GridError";
  } catch (const GridError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("pooling=first_k:12"), std::string::npos) << msg;
    EXPECT_NE(msg.find("repeat 0"), std::string::npos) << msg;
    EXPECT_NE(msg.find("\"first_k:12\""), std::string::npos) << msg;
  }
}

TEST(Threads, FromEnvironment) {
  ::unsetenv("DEC2ENC_THREADS");
  EXPECT_EQ(threads_from_env(), 1u);
  ::setenv("DEC2ENC_THREADS", "4", 1);
  EXPECT_EQ(threads_from_env(), 4u);
  for (const char* bad : {"0", "-2", "many", "3x"}) {
    ::setenv("DEC2ENC_THREADS", bad, 1);
    EXPECT_THROW(threads_from_env(), std::invalid_argument) << bad;
  }
  ::unsetenv("DEC2ENC_THREADS");
}

TEST(DataFiles, JsonlOverridesGenerator) {
  const auto dir = std::filesystem::temp_directory_path() / "dec2enc_data_test";
  std::filesystem::create_directories(dir);
  ExperimentConfig c = smoke();
  const TaskData generated = load_task_data(c);
  write_sequences_jsonl((dir / "train.jsonl").string(), generated.train, TaskKind::kClassification);
  write_sequences_jsonl((dir / "eval.jsonl").string(), generated.eval, TaskKind::kClassification);
  c.data = DataPaths{(dir / "train.jsonl").string(), (dir / "eval.jsonl").string()};
  c.seed = 12345;  // ignored for data once files are given
  const TaskData loaded = load_task_data(c);
  ASSERT_EQ(loaded.train.size(), generated.train.size());
  for (std::size_t i = 0; i < loaded.train.size(); ++i) EXPECT_EQ(loaded.train[i].tokens, generated.train[i].tokens);
  std::filesystem::remove_all(dir);
}

#ifdef DEC2ENC_CLI_PATH
int run_cli(const std::string& args) {
  const std::string cmd = std::string(DEC2ENC_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run_cli("selftest"), 0);
  EXPECT_NE(run_cli("bogus"), 0);
  EXPECT_NE(run_cli("--config /nonexistent.json train"), 0);
}

TEST(Cli, TrainEvalRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "dec2enc_cli_test";
  std::filesystem::create_directories(dir);
  const std::string cfg = std::string(DEC2ENC_SOURCE_DIR) + "/configs/smoke.json";
  const std::string ckpt = (dir / "m.ckpt").string();
  ASSERT_EQ(run_cli("--config " + cfg + " --out " + ckpt + " train"), 0);
  const std::string a = (dir / "a.csv").string(), b = (dir / "b.csv").string();
  ASSERT_EQ(run_cli("--config " + cfg + " --out " + a + " eval --checkpoint " + ckpt), 0);
  ASSERT_EQ(run_cli("--config " + cfg + " --out " + b + " eval --checkpoint " + ckpt), 0);
  EXPECT_EQ(slurp(a), slurp(b));
  EXPECT_EQ(slurp(a).rfind("metric,value,support\naccuracy,", 0), 0u) << slurp(a);
  ASSERT_EQ(run_cli("--config " + cfg + " --out " + (dir / "data").string() + " gen"), 0);
  EXPECT_TRUE(std::filesystem::exists(dir / "data" / "train.jsonl"));
  EXPECT_TRUE(std::filesystem::exists(dir / "data" / "eval.jsonl"));
  std::filesystem::remove_all(dir);
}
#endif

}  // namespace
}  // namespace dec2enc
