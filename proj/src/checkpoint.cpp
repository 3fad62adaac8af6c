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

#include "dec2enc/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>

#include "json.hpp"

#include "dec2enc/config_io.hpp"

namespace dec2enc {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "dec2enc-ckpt";
constexpr int kVersion = 1;

std::uint64_t to_le(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  else return __builtin_bswap64(v);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  v = to_le(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint64_t get_u64(std::istream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw std::runtime_error("checkpoint: truncated file");
  return to_le(v);
}

}  // namespace

void save_checkpoint(const std::string& path, const Model& model) {
  const auto params = model.named_parameters();
  json header;
  header["format"] = kFormat;
  header["version"] = kVersion;
  header["model"] = to_json(model.spec);
  header["params"] = json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, t] : params) {
    header["params"].push_back(json{{"name", name}, {"shape", t.shape()}, {"offset", offset}});
    offset += t.numel() * sizeof(double);
  }
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot open '" + path + "' for writing");
  put_u64(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& [name, t] : params) {
    for (double v : t.data()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  if (!out) throw std::runtime_error("checkpoint: write to '" + path + "' failed");
}

Model load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open '" + path + "'");
  const std::uint64_t header_len = get_u64(in);
  if (header_len > (std::uint64_t{1} << 30)) throw std::runtime_error("checkpoint: implausible header length");
  std::string text(header_len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw std::runtime_error("checkpoint: truncated header");
  const json header = json::parse(text);
  if (header.value("format", "") != kFormat || header.value("version", 0) != kVersion) {
    throw std::runtime_error("checkpoint: unsupported format in '" + path + "'");
  }

  Model model = init_model(model_spec_from_json(header.at("model")), 0);
  std::map<std::string, Tensor> by_name;
  for (const auto& [name, t] : model.named_parameters()) by_name.emplace(name, t);

  const std::streamoff data_start = static_cast<std::streamoff>(sizeof(std::uint64_t) + header_len);
  std::set<std::string> filled;
  for (const auto& entry : header.at("params")) {
    const auto name = entry.at("name").get<std::string>();
    auto it = by_name.find(name);
    if (it == by_name.end() || !filled.insert(name).second) {
      throw std::runtime_error("checkpoint: unexpected parameter '" + name + "'");
    }
    Tensor t = it->second;
    const auto shape = entry.at("shape").get<Shape>();
    if (shape != t.shape()) {
      throw std::runtime_error("checkpoint: parameter '" + name + "' has shape " + shape_to_string(shape) +
                               ", model expects " + shape_to_string(t.shape()));
    }
    in.seekg(data_start + static_cast<std::streamoff>(entry.at("offset").get<std::uint64_t>()));
    auto dst = t.mutable_data();
    for (auto& v : dst) v = std::bit_cast<double>(get_u64(in));
  }
  if (filled.size() != by_name.size()) throw std::runtime_error("checkpoint: missing parameters in '" + path + "'");
  return model;
}

}  // namespace dec2enc
