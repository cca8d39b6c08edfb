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

#include "kgrade/model/config.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "kgrade/tensor/ops.hpp"

namespace kgrade::model {

void StageSpec::validate() const {
  if (embed_dim == 0 || num_heads == 0) throw ConfigError("embed_dim and num_heads must be >= 1");
  if (embed_dim % num_heads != 0) {
    throw ConfigError("embed_dim " + std::to_string(embed_dim) + " not divisible by num_heads " +
                      std::to_string(num_heads));
  }
  if (num_blocks < 1) throw ConfigError("num_blocks must be >= 1");
  if (embed_stride < 1 || kv_stride < 1) throw ConfigError("strides must be >= 1");
  if (embed_kernel < 1 || qkv_kernel < 1) throw ConfigError("kernels must be >= 1");
  if (qkv_kernel % 2 == 0) throw ConfigError("qkv_kernel must be odd");
  if (mlp_ratio < 1) throw ConfigError("mlp_ratio must be >= 1");
}

BackboneConfig BackboneConfig::cvt13() {
  BackboneConfig c;
  c.input_resolution = 384;
  c.stages[0] = {.embed_kernel = 7, .embed_stride = 4, .embed_pad = 2, .embed_dim = 64,
                 .num_blocks = 1, .num_heads = 1};
  c.stages[1] = {.embed_kernel = 3, .embed_stride = 2, .embed_pad = 1, .embed_dim = 192,
                 .num_blocks = 2, .num_heads = 3};
  c.stages[2] = {.embed_kernel = 3, .embed_stride = 2, .embed_pad = 1, .embed_dim = 384,
                 .num_blocks = 10, .num_heads = 6};
  return c;
}

BackboneConfig BackboneConfig::tiny() {
  BackboneConfig c;
  c.input_resolution = 64;
  c.stages[0] = {.embed_kernel = 7, .embed_stride = 4, .embed_pad = 2, .embed_dim = 8,
                 .num_blocks = 1, .num_heads = 1};
  c.stages[1] = {.embed_kernel = 3, .embed_stride = 2, .embed_pad = 1, .embed_dim = 16,
                 .num_blocks = 1, .num_heads = 2};
  c.stages[2] = {.embed_kernel = 3, .embed_stride = 2, .embed_pad = 1, .embed_dim = 32,
                 .num_blocks = 1, .num_heads = 2};
  return c;
}

BackboneConfig BackboneConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open backbone config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed backbone config " + path.string() + ": " + e.what());
  }
  BackboneConfig c = j.get<BackboneConfig>();
  c.validate();
  return c;
}

BackboneConfig BackboneConfig::resolve(const std::string& name_or_path) {
  if (name_or_path == "cvt13") return cvt13();
  if (name_or_path == "tiny") return tiny();
  return load(name_or_path);
}

std::array<GridDims, 3> BackboneConfig::token_grids() const {
  std::array<GridDims, 3> grids{};
  std::size_t h = input_resolution, w = input_resolution;
  for (std::size_t s = 0; s < 3; ++s) {
    const StageSpec& spec = stages[s];
    try {
      h = tensor::conv_output_extent(h, spec.embed_kernel, spec.embed_stride, spec.embed_pad);
      w = tensor::conv_output_extent(w, spec.embed_kernel, spec.embed_stride, spec.embed_pad);
    } catch (const ShapeError& e) {
      throw ConfigError("stage " + std::to_string(s + 1) + " token grid: " + e.what());
    }
    grids[s] = {h, w};
  }
  return grids;
}

void BackboneConfig::validate() const {
  if (num_classes != 2) throw ConfigError("num_classes must be 2");
  if (input_resolution < 1 || in_channels < 1) throw ConfigError("empty input");
  for (const auto& s : stages) s.validate();
  (void)token_grids();
}

void to_json(nlohmann::json& j, const StageSpec& s) {
  j = nlohmann::json{{"embed_kernel", s.embed_kernel}, {"embed_stride", s.embed_stride},
                     {"embed_pad", s.embed_pad},       {"embed_dim", s.embed_dim},
                     {"num_blocks", s.num_blocks},     {"num_heads", s.num_heads},
                     {"qkv_kernel", s.qkv_kernel},     {"kv_stride", s.kv_stride},
                     {"mlp_ratio", s.mlp_ratio}};
}

void from_json(const nlohmann::json& j, StageSpec& s) {
  StageSpec d;
  s.embed_kernel = j.at("embed_kernel").get<std::size_t>();
  s.embed_stride = j.at("embed_stride").get<std::size_t>();
  s.embed_pad = j.at("embed_pad").get<std::size_t>();
  s.embed_dim = j.at("embed_dim").get<std::size_t>();
  s.num_blocks = j.at("num_blocks").get<std::size_t>();
  s.num_heads = j.at("num_heads").get<std::size_t>();
  s.qkv_kernel = j.value("qkv_kernel", d.qkv_kernel);
  s.kv_stride = j.value("kv_stride", d.kv_stride);
  s.mlp_ratio = j.value("mlp_ratio", d.mlp_ratio);
}

void to_json(nlohmann::json& j, const BackboneConfig& c) {
  j = nlohmann::json{{"input_resolution", c.input_resolution},
                     {"in_channels", c.in_channels},
                     {"num_classes", c.num_classes},
                     {"stages", c.stages}};
}

void from_json(const nlohmann::json& j, BackboneConfig& c) {
  c.input_resolution = j.at("input_resolution").get<std::size_t>();
  c.in_channels = j.value("in_channels", std::size_t{3});
  c.num_classes = j.value("num_classes", std::size_t{2});
  const auto& st = j.at("stages");
  if (!st.is_array() || st.size() != 3) throw ConfigError("backbone config needs exactly 3 stages");
  for (std::size_t i = 0; i < 3; ++i) c.stages[i] = st[i].get<StageSpec>();
}

}  // namespace kgrade::model
