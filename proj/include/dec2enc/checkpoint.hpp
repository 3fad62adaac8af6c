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

#ifndef DEC2ENC_CHECKPOINT_HPP_
#define DEC2ENC_CHECKPOINT_HPP_

#include <string>

#include "dec2enc/tasks.hpp"

namespace dec2enc {

// File layout: an 8-byte little-endian header length, a JSON header
//   {"format": "dec2enc-ckpt", "version": 1, "model": {...},
//    "params": [{"name", "shape", "offset"}, ...]}
// and then every parameter as little-endian f64, offsets counted in bytes
// from the start of the data section.
void save_checkpoint(const std::string& path, const Model& model);

// Rebuilds the model from the stored spec and fills every parameter; a
// missing, extra or mis-shaped tensor is an error.
Model load_checkpoint(const std::string& path);

}  // namespace dec2enc

#endif  // DEC2ENC_CHECKPOINT_HPP_
