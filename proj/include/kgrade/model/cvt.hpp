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

// Convolutional vision transformer classifier: three stages of convolutional
// token embedding + conv-projection attention blocks, global average pooling
// over the final tokens, and a 2-unit linear head.

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "kgrade/model/config.hpp"
#include "kgrade/stage.hpp"
#include "kgrade/tensor/tensor.hpp"

namespace kgrade::model {

using tensor::Tensor;

template <typename T>
struct EmbedParams {
  Tensor<T> conv_weight;  // [D, C_in, k, k]
  Tensor<T> conv_bias;    // [D]
  Tensor<T> norm_weight;  // [D]
  Tensor<T> norm_bias;    // [D]
};

template <typename T>
struct AttentionParams {
  // Depthwise projection kernels, [D, 1, k, k], no bias.
  Tensor<T> dw_q, dw_k, dw_v;
  // Pointwise projections, [D, D] + [D].
  Tensor<T> proj_q_weight, proj_q_bias;
  Tensor<T> proj_k_weight, proj_k_bias;
  Tensor<T> proj_v_weight, proj_v_bias;
  Tensor<T> out_weight, out_bias;
};

template <typename T>
struct BlockParams {
  Tensor<T> norm1_weight, norm1_bias;
  AttentionParams<T> attn;
  Tensor<T> norm2_weight, norm2_bias;
  Tensor<T> fc1_weight, fc1_bias;  // [r*D, D]
  Tensor<T> fc2_weight, fc2_bias;  // [D, r*D]
};

template <typename T>
struct StageParams {
  EmbedParams<T> embed;
  std::vector<BlockParams<T>> blocks;
};

/// Tokens [N, H*W, D] laid out row-major over the H x W grid.
template <typename T>
struct TokenMap {
  Tensor<T> tokens;
  GridDims grid;
};

template <typename T>
struct QkvProjection {
  Tensor<T> q;  // [N, H*W, D]
  Tensor<T> k;  // [N, H'*W', D]
  Tensor<T> v;  // [N, H'*W', D]
  GridDims kv_grid;
};

/// Optional capture of intermediate results, for inspection and tests.
template <typename T>
struct ForwardTrace {
  std::vector<GridDims> stage_grids;
  std::vector<GridDims> kv_grids;
  /// Attention probabilities per block, [N*heads, L_q, L_kv].
  std::vector<Tensor<T>> attention;
  std::vector<Tensor<T>> stage_tokens;
  Tensor<T> pooled;
};

template <typename T>
TokenMap<T> conv_token_embed(const Tensor<T>& feature_map, const EmbedParams<T>& params,
                             const StageSpec& spec);

template <typename T>
QkvProjection<T> conv_projection(const TokenMap<T>& input, const AttentionParams<T>& params,
                                 const StageSpec& spec);

/// Pre-norm conv-projection attention + pre-norm MLP, both residual.
template <typename T>
TokenMap<T> attention_block(const TokenMap<T>& input, const BlockParams<T>& params,
                            const StageSpec& spec, ForwardTrace<T>* trace = nullptr);

template <typename T>
struct NamedParameter {
  std::string name;
  Tensor<T> tensor;
};

/// One stage classifier. Parameter tensors are shared handles: copies of a
/// StageModel alias the same weights (use clone() for an independent copy).
template <typename T>
class StageModel {
 public:
  explicit StageModel(BackboneConfig config, std::optional<Stage> stage = std::nullopt);

  /// Truncated-normal (std 0.02, cut at 2 std) weights, zero biases, unit
  /// norm gains. Deterministic in seed.
  static StageModel initialized(const BackboneConfig& config, std::uint64_t seed,
                                std::optional<Stage> stage = std::nullopt);

  const BackboneConfig& config() const { return config_; }
  std::optional<Stage> stage() const { return stage_; }
  void set_stage(std::optional<Stage> s) { stage_ = s; }

  /// images [N, C, R, R] -> logits [N, 2].
  Tensor<T> forward(const Tensor<T>& images, ForwardTrace<T>* trace = nullptr) const;

  /// Pooled backbone features [N, D_final], before the head.
  Tensor<T> features(const Tensor<T>& images, ForwardTrace<T>* trace = nullptr) const;

  /// Parameters in a fixed canonical order.
  std::vector<NamedParameter<T>> parameters() const;
  std::optional<Tensor<T>> parameter(const std::string& name) const;
  std::vector<bool> trainable_mask() const;
  std::size_t trainable_count() const;

  /// Only the head weight and bias stay trainable.
  void freeze_backbone();
  void unfreeze_all();

  /// Copies values of same-named parameters from `source` (a pretrained
  /// weight hook). Missing names are left untouched; shape mismatches throw.
  std::size_t load_named(const std::vector<NamedParameter<T>>& source);

  StageModel clone() const;

  template <typename To>
  StageModel<To> cast() const;

  std::vector<StageParams<T>> stages;
  Tensor<T> head_weight;  // [2, D_final]
  Tensor<T> head_bias;    // [2]

 private:
  BackboneConfig config_;
  std::optional<Stage> stage_;
};

/// grid tokens [N, H*W, D] -> feature map [N, D, H, W].
template <typename T>
Tensor<T> tokens_to_map(const TokenMap<T>& t);

}  // namespace kgrade::model
