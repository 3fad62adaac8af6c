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

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "dec2enc/check/selftest.hpp"
#include "dec2enc/checkpoint.hpp"
#include "dec2enc/config_io.hpp"
#include "dec2enc/experiment.hpp"

namespace {

using namespace dec2enc;

struct GlobalFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

ExperimentConfig resolve_config(const GlobalFlags& g) {
  ExperimentConfig c;
  if (!g.config.empty()) c = load_experiment(g.config);
  if (g.seed) c.seed = *g.seed;
  return c;
}

void print_metrics(std::ostream& os, const std::string& prefix, const std::vector<MetricReport>& metrics) {
  os << prefix;
  for (const auto& m : metrics) os << ' ' << m.name << '=' << format_double(m.value);
  if (!metrics.empty()) os << " n=" << metrics.front().support;
  os << '\n';
}

int cmd_gen(const GlobalFlags& g) {
  const ExperimentConfig c = resolve_config(g);
  const std::filesystem::path dir = g.out.empty() ? "data" : g.out;
  std::filesystem::create_directories(dir);
  const TaskData data = load_task_data(c);
  const auto train_path = (dir / "train.jsonl").string();
  const auto eval_path = (dir / "eval.jsonl").string();
  if (data.kind == TaskKind::kRanking) {
    write_ranking_jsonl(train_path, data.ranking_train);
    write_ranking_jsonl(eval_path, data.ranking_eval);
  } else {
    write_sequences_jsonl(train_path, data.train, data.kind);
    write_sequences_jsonl(eval_path, data.eval, data.kind);
  }
  std::cout << "wrote " << train_path << " and " << eval_path << '\n';
  return 0;
}

int cmd_train(const GlobalFlags& g) {
  ExperimentConfig c = resolve_config(g);
  if (c.train.eval_every == 0) c.train.eval_every = std::max<std::size_t>(1, c.train.steps / 10);
  const TaskData data = load_task_data(c);
  const RunOutcome run = run_single(c, data, 0);
  for (const auto& e : run.result.evals) {
    const double loss = e.step == 0 ? 0.0 : run.result.loss_curve[e.step - 1];
    std::cout << "step " << e.step;
    if (e.step > 0) std::cout << " loss=" << format_double(loss);
    print_metrics(std::cout, "", e.metrics);
  }
  print_metrics(std::cout, "final", run.metrics);
  const std::string path = g.out.empty() ? "model.ckpt" : g.out;
  save_checkpoint(path, run.model);
  std::cout << "saved " << path << '\n';
  return 0;
}

int cmd_ablate(const GlobalFlags& g) {
  const ExperimentConfig c = resolve_config(g);
  if (!c.ablation) throw std::invalid_argument("ablate: config has no \"ablation\" section");
  const auto records = run_ablation(c, *c.ablation, threads_from_env());
  const std::string path = g.out.empty() ? c.output_csv : g.out;
  write_csv_file(path, records);
  for (const auto& r : records) {
    if (r.run_id.ends_with("-mean")) print_metrics(std::cout, r.axis + "=" + r.axis_value, r.metrics);
  }
  std::cout << "wrote " << path << '\n';
  return 0;
}

int cmd_eval(const GlobalFlags& g, const std::string& checkpoint) {
  const ExperimentConfig c = resolve_config(g);
  const Model model = load_checkpoint(checkpoint);
  ExperimentConfig data_config = c;
  data_config.model = model.spec;
  const auto metrics = evaluate(model, load_task_data(data_config), c.train.eval_batch_size);
  std::ostream* os = &std::cout;
  std::ofstream file;
  if (!g.out.empty()) {
    file.open(g.out, std::ios::binary);
    if (!file) throw std::runtime_error("cannot open '" + g.out + "' for writing");
    os = &file;
  }
  *os << "metric,value,support\n";
  for (const auto& m : metrics) *os << m.name << ',' << format_double(m.value) << ',' << m.support << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dec2enc: small encoder models with ablation harness"};
  app.require_subcommand(1);
  GlobalFlags g;
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Override the experiment seed");
  app.add_option("--config", g.config, "Experiment config (JSON)");
  app.add_option("--out", g.out, "Output path");

  auto* gen = app.add_subcommand("gen", "Write the synthetic train/eval datasets as JSONL");
  auto* train = app.add_subcommand("train", "Train one model, report eval metrics, save a checkpoint");
  auto* ablate = app.add_subcommand("ablate", "Run the ablation grid and write the CSV report");
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on the config's eval split");
  std::string checkpoint;
  eval->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  auto* selftest = app.add_subcommand("selftest", "Run the gradient and invariant checks");
  app.fallthrough();

  CLI11_PARSE(app, argc, argv);
  if (seed_opt->count() > 0) g.seed = seed;

  try {
    if (gen->parsed()) return cmd_gen(g);
    if (train->parsed()) return cmd_train(g);
    if (ablate->parsed()) return cmd_ablate(g);
    if (eval->parsed()) return cmd_eval(g, checkpoint);
    if (selftest->parsed()) return check::run_selftest(std::cout, g.seed.value_or(0)) == 0 ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
