// Copyright 2026 The internimage Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "internimage/model.hpp"

namespace internimage {

// Model config: flat "key=value" lines. Keys written in this order:
//   name c1 cprime l1 l2 l3 l4 ffn_ratio layer_scale num_classes seed
// followed by kernel / in_channels / shared_weights / multi_group /
// normalization only when they differ from the defaults. Blank lines and
// lines starting with '#' are ignored on read.
std::string format_config(const ModelConfig& cfg);
ModelConfig parse_config(std::string_view text);
void save_config(const std::filesystem::path& path, const ModelConfig& cfg);
ModelConfig load_config(const std::filesystem::path& path);

// Weights: magic "IIMW", version byte, then one record per tensor until EOF:
//   u32 name_len | name bytes | u32 rank | u64 dims[rank] | f64 data[prod(dims)]
// All integers and doubles little-endian.
inline constexpr char kWeightsMagic[4] = {'I', 'I', 'M', 'W'};
inline constexpr std::uint8_t kWeightsVersion = 1;

struct NamedTensor {
  std::string name;
  std::vector<std::int64_t> dims;
  std::vector<double> data;
};

std::string encode_weights(const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> decode_weights(std::string_view bytes);

std::vector<NamedTensor> model_tensors(const Model& m);
/// Copies tensors into an assembled model; names, order and dims must match.
void load_model_tensors(Model& m, const std::vector<NamedTensor>& tensors);

void save_weights(const std::filesystem::path& path, const Model& m);
/// Assembles a model for cfg and fills it from the weight file.
Model load_weights(const std::filesystem::path& path, const ModelConfig& cfg);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace internimage
