// Copyright (c) 2026 The kgrade Authors. All Rights Reserved.
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

#include <array>
#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace kgrade::model {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// One transformer stage: a strided convolutional token embedding followed
/// by num_blocks convolutional-projection attention blocks.
struct StageSpec {
  std::size_t embed_kernel = 3;
  std::size_t embed_stride = 2;
  std::size_t embed_pad = 1;
  std::size_t embed_dim = 64;
  std::size_t num_blocks = 1;
  std::size_t num_heads = 1;
  /// Depthwise projection kernel for Q/K/V; padding is kernel / 2.
  std::size_t qkv_kernel = 3;
  /// Stride of the K/V depthwise projection (spatial squeeze).
  std::size_t kv_stride = 2;
  std::size_t mlp_ratio = 4;

  void validate() const;
  bool operator==(const StageSpec&) const = default;
};

struct GridDims {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t tokens() const { return height * width; }
  bool operator==(const GridDims&) const = default;
};

struct BackboneConfig {
  std::size_t input_resolution = 384;
  std::size_t in_channels = 3;
  std::array<StageSpec, 3> stages{};
  std::size_t num_classes = 2;

  /// CvT-13 layout for 384 x 384 inputs.
  static BackboneConfig cvt13();
  /// Small layout for CPU training at 64 x 64.
  static BackboneConfig tiny();
  /// Resolves "cvt13" / "tiny" or a path to a JSON file.
  static BackboneConfig resolve(const std::string& name_or_path);
  static BackboneConfig load(const std::filesystem::path& path);

  /// Token grid after each stage's embedding, from the conv size formula.
  std::array<GridDims, 3> token_grids() const;
  std::size_t final_dim() const { return stages[2].embed_dim; }

  void validate() const;
  bool operator==(const BackboneConfig&) const = default;
};

void to_json(nlohmann::json& j, const StageSpec& s);
void from_json(const nlohmann::json& j, StageSpec& s);
void to_json(nlohmann::json& j, const BackboneConfig& c);
void from_json(const nlohmann::json& j, BackboneConfig& c);

}  // namespace kgrade::model
