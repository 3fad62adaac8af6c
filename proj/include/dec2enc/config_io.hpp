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

#ifndef DEC2ENC_CONFIG_IO_HPP_
#define DEC2ENC_CONFIG_IO_HPP_

#include <string>

#include "json.hpp"

#include "dec2enc/encoder.hpp"
#include "dec2enc/pooling.hpp"
#include "dec2enc/synthetic.hpp"
#include "dec2enc/tasks.hpp"

namespace dec2enc {

// JSON forms of the configuration structs. Readers start from the defaults,
// override the keys present and reject unknown keys.

nlohmann::json to_json(const EncoderConfig& config);
EncoderConfig encoder_config_from_json(const nlohmann::json& j);

// "mean", "first_k:K", "last_k:K" (either with an optional ":literal"
// suffix), "attention_q:H<h>:V<v>", "attention_kv:H<h>:V<v>".
PoolingSpec parse_pooling(const std::string& text);

nlohmann::json to_json(const TaskSpec& spec);
TaskSpec task_spec_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ModelSpec& spec);
ModelSpec model_spec_from_json(const nlohmann::json& j);

nlohmann::json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const SyntheticTaskSpec& spec);
SyntheticTaskSpec synthetic_spec_from_json(const nlohmann::json& j);

// Shortest round-tripping decimal form.
std::string format_double(double value);

}  // namespace dec2enc

#endif  // DEC2ENC_CONFIG_IO_HPP_
