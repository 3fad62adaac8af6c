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

#include "dec2enc/config_io.hpp"

#include <algorithm>
#include <charconv>
#include <initializer_list>
#include <stdexcept>
#include <string_view>

namespace dec2enc {

using nlohmann::json;

namespace {

void check_object(const json& j, std::initializer_list<std::string_view> allowed, const char* where) {
  if (!j.is_object()) throw std::invalid_argument(std::string(where) + ": expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw std::invalid_argument(std::string(where) + ": unknown key '" + key + "'");
    }
  }
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) out = it->template get<T>();
}

std::size_t parse_count(std::string_view text, const std::string& whole) {
  std::size_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw std::invalid_argument("bad pooling spec '" + whole + "'");
  }
  return value;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

json to_json(const EncoderConfig& c) {
  return json{{"vocab_size", c.vocab_size},
              {"d_model", c.d_model},
              {"n_layers", c.n_layers},
              {"n_heads", c.n_heads},
              {"d_ff", c.d_ff},
              {"max_len", c.max_len},
              {"mask_mode", c.mask_mode.to_string()},
              {"padding_side", to_string(c.padding_side)},
              {"attn_dropout", c.attn_dropout},
              {"ffn_dropout", c.ffn_dropout},
              {"seed", c.seed}};
}

EncoderConfig encoder_config_from_json(const json& j) {
  check_object(j,
               {"vocab_size", "d_model", "n_layers", "n_heads", "d_ff", "max_len", "mask_mode", "padding_side",
                "attn_dropout", "ffn_dropout", "seed"},
               "encoder");
  EncoderConfig c;
  read(j, "vocab_size", c.vocab_size);
  read(j, "d_model", c.d_model);
  read(j, "n_layers", c.n_layers);
  read(j, "n_heads", c.n_heads);
  read(j, "d_ff", c.d_ff);
  read(j, "max_len", c.max_len);
  if (j.contains("mask_mode")) c.mask_mode = MaskMode::parse(j.at("mask_mode").get<std::string>());
  if (j.contains("padding_side")) c.padding_side = parse_padding_side(j.at("padding_side").get<std::string>());
  read(j, "attn_dropout", c.attn_dropout);
  read(j, "ffn_dropout", c.ffn_dropout);
  read(j, "seed", c.seed);
  return c;
}

PoolingSpec parse_pooling(const std::string& text) {
  std::vector<std::string_view> parts;
  std::string_view rest = text;
  while (true) {
    const auto colon = rest.find(':');
    parts.push_back(rest.substr(0, colon));
    if (colon == std::string_view::npos) break;
    rest.remove_prefix(colon + 1);
  }
  const std::string_view head = parts.front();
  PoolingSpec spec;
  if (head == "mean" && parts.size() == 1) {
    spec.kind = MeanPool{};
  } else if ((head == "first_k" || head == "last_k") && (parts.size() == 2 || parts.size() == 3)) {
    const std::size_t k = parse_count(parts[1], text);
    bool skip = true;
    if (parts.size() == 3) {
      if (parts[2] != "literal") throw std::invalid_argument("bad pooling spec '" + text + "'");
      skip = false;
    }
    if (head == "first_k") spec.kind = FirstK{k, skip};
    else spec.kind = LastK{k, skip};
  } else if ((head == "attention_q" || head == "attention_kv") && parts.size() == 3 &&
             parts[1].starts_with('H') && parts[2].starts_with('V')) {
    AttentionPool a;
    a.variant = head == "attention_q" ? ProbeVariant::kQueryProbe : ProbeVariant::kKVProbe;
    a.heads = parse_count(parts[1].substr(1), text);
    a.latents = parse_count(parts[2].substr(1), text);
    spec.kind = a;
  } else {
    throw std::invalid_argument("bad pooling spec '" + text + "'");
  }
  return spec;
}

json to_json(const TaskSpec& s) {
  return json{{"kind", to_string(s.kind)}, {"n_classes", s.n_classes}, {"hidden", s.hidden}};
}

TaskSpec task_spec_from_json(const json& j) {
  check_object(j, {"kind", "n_classes", "hidden"}, "head");
  TaskSpec s;
  if (j.contains("kind")) s.kind = parse_task_kind(j.at("kind").get<std::string>());
  read(j, "n_classes", s.n_classes);
  read(j, "hidden", s.hidden);
  return s;
}

json to_json(const ModelSpec& s) {
  return json{{"encoder", to_json(s.encoder)}, {"pooling", s.pooling.label()}, {"head", to_json(s.task)}};
}

ModelSpec model_spec_from_json(const json& j) {
  check_object(j, {"encoder", "pooling", "head"}, "model");
  ModelSpec s;
  if (j.contains("encoder")) s.encoder = encoder_config_from_json(j.at("encoder"));
  if (j.contains("pooling")) s.pooling = parse_pooling(j.at("pooling").get<std::string>());
  if (j.contains("head")) s.task = task_spec_from_json(j.at("head"));
  return s;
}

json to_json(const TrainConfig& c) {
  return json{{"steps", c.steps},
              {"batch_size", c.batch_size},
              {"lr", c.adam.lr},
              {"beta1", c.adam.beta1},
              {"beta2", c.adam.beta2},
              {"eps", c.adam.eps},
              {"eval_every", c.eval_every},
              {"eval_batch_size", c.eval_batch_size}};
}

TrainConfig train_config_from_json(const json& j) {
  check_object(j, {"steps", "batch_size", "lr", "beta1", "beta2", "eps", "eval_every", "eval_batch_size"}, "train");
  TrainConfig c;
  read(j, "steps", c.steps);
  read(j, "batch_size", c.batch_size);
  read(j, "lr", c.adam.lr);
  read(j, "beta1", c.adam.beta1);
  read(j, "beta2", c.adam.beta2);
  read(j, "eps", c.adam.eps);
  read(j, "eval_every", c.eval_every);
  read(j, "eval_batch_size", c.eval_batch_size);
  if (!(c.adam.lr >= 0.0)) throw std::invalid_argument("train: lr must be >= 0");
  return c;
}

json to_json(const SyntheticTaskSpec& s) {
  return json{{"name", s.name},
              {"min_len", s.min_len},
              {"max_len", s.max_len},
              {"vocab", s.vocab},
              {"n_train", s.n_train},
              {"n_eval", s.n_eval},
              {"n_classes", s.n_classes},
              {"balanced_distractors", s.balanced_distractors},
              {"list_size", s.list_size},
              {"query_len", s.query_len},
              {"doc_len", s.doc_len},
              {"noise", s.noise}};
}

SyntheticTaskSpec synthetic_spec_from_json(const json& j) {
  check_object(j,
               {"name", "min_len", "max_len", "vocab", "n_train", "n_eval", "n_classes", "balanced_distractors",
                "list_size", "query_len", "doc_len", "noise"},
               "task");
  SyntheticTaskSpec s;
  read(j, "name", s.name);
  read(j, "min_len", s.min_len);
  read(j, "max_len", s.max_len);
  read(j, "vocab", s.vocab);
  read(j, "n_train", s.n_train);
  read(j, "n_eval", s.n_eval);
  read(j, "n_classes", s.n_classes);
  read(j, "balanced_distractors", s.balanced_distractors);
  read(j, "list_size", s.list_size);
  read(j, "query_len", s.query_len);
  read(j, "doc_len", s.doc_len);
  read(j, "noise", s.noise);
  return s;
}

}  // namespace dec2enc
