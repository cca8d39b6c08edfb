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

#include "kgrade/model/cvt.hpp"

#include <cmath>
#include <random>

#include "kgrade/tensor/ops.hpp"

namespace kgrade::model {

namespace ops = kgrade::tensor;
using tensor::Shape;

template <typename T>
Tensor<T> tokens_to_map(const TokenMap<T>& t) {
  const std::size_t N = t.tokens.extent(0), L = t.tokens.extent(1), D = t.tokens.extent(2);
  if (L != t.grid.tokens()) throw ShapeError("token count does not match grid");
  return ops::reshape(ops::permute(t.tokens, {0, 2, 1}), Shape{N, D, t.grid.height, t.grid.width});
}

namespace {

template <typename T>
Tensor<T> map_to_tokens(const Tensor<T>& map) {
  const std::size_t N = map.extent(0), D = map.extent(1), H = map.extent(2), W = map.extent(3);
  return ops::permute(ops::reshape(map, Shape{N, D, H * W}), {0, 2, 1});
}

// [N, L, D] -> [N*heads, L, D/heads]
template <typename T>
Tensor<T> split_heads(const Tensor<T>& x, std::size_t heads) {
  const std::size_t N = x.extent(0), L = x.extent(1), D = x.extent(2);
  const std::size_t dh = D / heads;
  auto r = ops::reshape(x, Shape{N, L, heads, dh});
  return ops::reshape(ops::permute(r, {0, 2, 1, 3}), Shape{N * heads, L, dh});
}

// [N*heads, L, dh] -> [N, L, heads*dh]
template <typename T>
Tensor<T> merge_heads(const Tensor<T>& x, std::size_t heads) {
  const std::size_t NH = x.extent(0), L = x.extent(1), dh = x.extent(2);
  const std::size_t N = NH / heads;
  auto r = ops::reshape(x, Shape{N, heads, L, dh});
  return ops::reshape(ops::permute(r, {0, 2, 1, 3}), Shape{N, L, heads * dh});
}

template <typename T>
Tensor<T> depthwise(const Tensor<T>& map, const Tensor<T>& kernel, std::size_t k,
                    std::size_t stride) {
  tensor::Conv2dParams p;
  p.stride_h = p.stride_w = stride;
  p.pad_h = p.pad_w = k / 2;
  p.groups = map.extent(1);
  return ops::conv2d(map, kernel, Tensor<T>{}, p);
}

}  // namespace

template <typename T>
TokenMap<T> conv_token_embed(const Tensor<T>& feature_map, const EmbedParams<T>& params,
                             const StageSpec& spec) {
  tensor::Conv2dParams p;
  p.stride_h = p.stride_w = spec.embed_stride;
  p.pad_h = p.pad_w = spec.embed_pad;
  Tensor<T> map = ops::conv2d(feature_map, params.conv_weight, params.conv_bias, p);
  const GridDims grid{map.extent(2), map.extent(3)};
  Tensor<T> tokens = ops::layer_norm(map_to_tokens(map), params.norm_weight, params.norm_bias);
  return {tokens, grid};
}

template <typename T>
QkvProjection<T> conv_projection(const TokenMap<T>& input, const AttentionParams<T>& params,
                                 const StageSpec& spec) {
  if (input.tokens.dim() != 3 || input.tokens.extent(1) != input.grid.tokens()) {
    throw ShapeError("conv_projection: token count " +
                     (input.tokens.dim() == 3 ? std::to_string(input.tokens.extent(1)) : "?") +
                     " does not match grid " + std::to_string(input.grid.height) + "x" +
                     std::to_string(input.grid.width));
  }
  const Tensor<T> map = tokens_to_map(input);
  const std::size_t k = spec.qkv_kernel;
  Tensor<T> q_map = depthwise(map, params.dw_q, k, 1);
  Tensor<T> k_map = depthwise(map, params.dw_k, k, spec.kv_stride);
  Tensor<T> v_map = depthwise(map, params.dw_v, k, spec.kv_stride);
  QkvProjection<T> out;
  out.kv_grid = {k_map.extent(2), k_map.extent(3)};
  out.q = ops::linear(map_to_tokens(q_map), params.proj_q_weight, params.proj_q_bias);
  out.k = ops::linear(map_to_tokens(k_map), params.proj_k_weight, params.proj_k_bias);
  out.v = ops::linear(map_to_tokens(v_map), params.proj_v_weight, params.proj_v_bias);
  return out;
}

template <typename T>
TokenMap<T> attention_block(const TokenMap<T>& input, const BlockParams<T>& params,
                            const StageSpec& spec, ForwardTrace<T>* trace) {
  const std::size_t D = input.tokens.extent(2);
  if (D % spec.num_heads != 0) throw ShapeError("embed_dim not divisible by num_heads");
  const std::size_t heads = spec.num_heads;
  const std::size_t dh = D / heads;

  TokenMap<T> normed{ops::layer_norm(input.tokens, params.norm1_weight, params.norm1_bias),
                     input.grid};
  QkvProjection<T> qkv = conv_projection(normed, params.attn, spec);
  Tensor<T> q = split_heads(qkv.q, heads);
  Tensor<T> k = split_heads(qkv.k, heads);
  Tensor<T> v = split_heads(qkv.v, heads);
  Tensor<T> scores = ops::scale(ops::bmm(q, k, /*transpose_b=*/true),
                                T(1) / std::sqrt(static_cast<T>(dh)));
  Tensor<T> probs = ops::softmax(scores);
  Tensor<T> context = merge_heads(ops::bmm(probs, v), heads);
  Tensor<T> attn_out = ops::linear(context, params.attn.out_weight, params.attn.out_bias);
  Tensor<T> x = ops::add(input.tokens, attn_out);

  Tensor<T> h = ops::layer_norm(x, params.norm2_weight, params.norm2_bias);
  h = ops::gelu(ops::linear(h, params.fc1_weight, params.fc1_bias));
  h = ops::linear(h, params.fc2_weight, params.fc2_bias);
  x = ops::add(x, h);

  if (trace != nullptr) {
    trace->attention.push_back(probs);
    trace->kv_grids.push_back(qkv.kv_grid);
  }
  return {x, input.grid};
}

// ---------------------------------------------------------------------------
// StageModel

template <typename T>
StageModel<T>::StageModel(BackboneConfig config, std::optional<Stage> stage)
    : config_(std::move(config)), stage_(stage) {
  config_.validate();
  std::size_t in_ch = config_.in_channels;
  stages.resize(3);
  for (std::size_t s = 0; s < 3; ++s) {
    const StageSpec& spec = config_.stages[s];
    const std::size_t D = spec.embed_dim;
    const std::size_t k = spec.qkv_kernel;
    const std::size_t hidden = D * spec.mlp_ratio;
    auto& st = stages[s];
    st.embed.conv_weight = Tensor<T>::zeros({D, in_ch, spec.embed_kernel, spec.embed_kernel}, true);
    st.embed.conv_bias = Tensor<T>::zeros({D}, true);
    st.embed.norm_weight = Tensor<T>::full({D}, T(1), true);
    st.embed.norm_bias = Tensor<T>::zeros({D}, true);
    st.blocks.resize(spec.num_blocks);
    for (auto& b : st.blocks) {
      b.norm1_weight = Tensor<T>::full({D}, T(1), true);
      b.norm1_bias = Tensor<T>::zeros({D}, true);
      b.attn.dw_q = Tensor<T>::zeros({D, 1, k, k}, true);
      b.attn.dw_k = Tensor<T>::zeros({D, 1, k, k}, true);
      b.attn.dw_v = Tensor<T>::zeros({D, 1, k, k}, true);
      b.attn.proj_q_weight = Tensor<T>::zeros({D, D}, true);
      b.attn.proj_q_bias = Tensor<T>::zeros({D}, true);
      b.attn.proj_k_weight = Tensor<T>::zeros({D, D}, true);
      b.attn.proj_k_bias = Tensor<T>::zeros({D}, true);
      b.attn.proj_v_weight = Tensor<T>::zeros({D, D}, true);
      b.attn.proj_v_bias = Tensor<T>::zeros({D}, true);
      b.attn.out_weight = Tensor<T>::zeros({D, D}, true);
      b.attn.out_bias = Tensor<T>::zeros({D}, true);
      b.norm2_weight = Tensor<T>::full({D}, T(1), true);
      b.norm2_bias = Tensor<T>::zeros({D}, true);
      b.fc1_weight = Tensor<T>::zeros({hidden, D}, true);
      b.fc1_bias = Tensor<T>::zeros({hidden}, true);
      b.fc2_weight = Tensor<T>::zeros({D, hidden}, true);
      b.fc2_bias = Tensor<T>::zeros({D}, true);
    }
    in_ch = D;
  }
  head_weight = Tensor<T>::zeros({std::size_t(kNumClasses), config_.final_dim()}, true);
  head_bias = Tensor<T>::zeros({std::size_t(kNumClasses)}, true);
}

namespace {

bool is_weight_to_init(const std::string& name) {
  // Conv and linear kernels; biases and norm parameters keep their defaults.
  const auto ends_with = [&](std::string_view suffix) {
    return name.size() >= suffix.size() &&
           name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  if (name.find("norm") != std::string::npos) return false;
  return ends_with(".weight") || ends_with("dw_q") || ends_with("dw_k") || ends_with("dw_v");
}

}  // namespace

template <typename T>
StageModel<T> StageModel<T>::initialized(const BackboneConfig& config, std::uint64_t seed,
                                         std::optional<Stage> stage) {
  StageModel<T> m(config, stage);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  constexpr double kStd = 0.02;
  for (auto& p : m.parameters()) {
    if (!is_weight_to_init(p.name)) continue;
    for (T& v : p.tensor.mutable_data()) {
      double z;
      do {
        z = normal(rng);
      } while (std::abs(z) > 2.0);
      v = static_cast<T>(z * kStd);
    }
  }
  return m;
}

template <typename T>
std::vector<NamedParameter<T>> StageModel<T>::parameters() const {
  std::vector<NamedParameter<T>> out;
  for (std::size_t s = 0; s < stages.size(); ++s) {
    const std::string sp = "stages." + std::to_string(s) + ".";
    const auto& st = stages[s];
    out.push_back({sp + "embed.conv.weight", st.embed.conv_weight});
    out.push_back({sp + "embed.conv.bias", st.embed.conv_bias});
    out.push_back({sp + "embed.norm.weight", st.embed.norm_weight});
    out.push_back({sp + "embed.norm.bias", st.embed.norm_bias});
    for (std::size_t bi = 0; bi < st.blocks.size(); ++bi) {
      const std::string bp = sp + "blocks." + std::to_string(bi) + ".";
      const auto& b = st.blocks[bi];
      out.push_back({bp + "norm1.weight", b.norm1_weight});
      out.push_back({bp + "norm1.bias", b.norm1_bias});
      out.push_back({bp + "attn.dw_q", b.attn.dw_q});
      out.push_back({bp + "attn.dw_k", b.attn.dw_k});
      out.push_back({bp + "attn.dw_v", b.attn.dw_v});
      out.push_back({bp + "attn.proj_q.weight", b.attn.proj_q_weight});
      out.push_back({bp + "attn.proj_q.bias", b.attn.proj_q_bias});
      out.push_back({bp + "attn.proj_k.weight", b.attn.proj_k_weight});
      out.push_back({bp + "attn.proj_k.bias", b.attn.proj_k_bias});
      out.push_back({bp + "attn.proj_v.weight", b.attn.proj_v_weight});
      out.push_back({bp + "attn.proj_v.bias", b.attn.proj_v_bias});
      out.push_back({bp + "attn.out.weight", b.attn.out_weight});
      out.push_back({bp + "attn.out.bias", b.attn.out_bias});
      out.push_back({bp + "norm2.weight", b.norm2_weight});
      out.push_back({bp + "norm2.bias", b.norm2_bias});
      out.push_back({bp + "mlp.fc1.weight", b.fc1_weight});
      out.push_back({bp + "mlp.fc1.bias", b.fc1_bias});
      out.push_back({bp + "mlp.fc2.weight", b.fc2_weight});
      out.push_back({bp + "mlp.fc2.bias", b.fc2_bias});
    }
  }
  out.push_back({"head.weight", head_weight});
  out.push_back({"head.bias", head_bias});
  return out;
}

template <typename T>
std::optional<Tensor<T>> StageModel<T>::parameter(const std::string& name) const {
  for (auto& p : parameters()) {
    if (p.name == name) return p.tensor;
  }
  return std::nullopt;
}

template <typename T>
std::vector<bool> StageModel<T>::trainable_mask() const {
  std::vector<bool> mask;
  for (const auto& p : parameters()) mask.push_back(p.tensor.requires_grad());
  return mask;
}

template <typename T>
std::size_t StageModel<T>::trainable_count() const {
  std::size_t n = 0;
  for (const auto& p : parameters()) {
    if (p.tensor.requires_grad()) n += p.tensor.numel();
  }
  return n;
}

template <typename T>
void StageModel<T>::freeze_backbone() {
  for (auto& p : parameters()) p.tensor.set_requires_grad(p.name.rfind("head.", 0) == 0);
}

template <typename T>
void StageModel<T>::unfreeze_all() {
  for (auto& p : parameters()) p.tensor.set_requires_grad(true);
}

template <typename T>
std::size_t StageModel<T>::load_named(const std::vector<NamedParameter<T>>& source) {
  std::size_t loaded = 0;
  for (auto& dst : parameters()) {
    for (const auto& src : source) {
      if (src.name != dst.name) continue;
      if (src.tensor.shape() != dst.tensor.shape()) {
        throw ShapeError("parameter " + dst.name + ": expected " +
                         tensor::to_string(dst.tensor.shape()) + ", got " +
                         tensor::to_string(src.tensor.shape()));
      }
      std::copy(src.tensor.data().begin(), src.tensor.data().end(),
                dst.tensor.mutable_data().begin());
      ++loaded;
      break;
    }
  }
  return loaded;
}

template <typename T>
StageModel<T> StageModel<T>::clone() const {
  return cast<T>();
}

template <typename T>
template <typename To>
StageModel<To> StageModel<T>::cast() const {
  StageModel<To> out(config_, stage_);
  auto src = parameters();
  auto dst = out.parameters();
  for (std::size_t i = 0; i < src.size(); ++i) {
    auto d = dst[i].tensor.mutable_data();
    std::copy(src[i].tensor.data().begin(), src[i].tensor.data().end(), d.begin());
    dst[i].tensor.set_requires_grad(src[i].tensor.requires_grad());
  }
  return out;
}

template <typename T>
Tensor<T> StageModel<T>::features(const Tensor<T>& images, ForwardTrace<T>* trace) const {
  const std::size_t R = config_.input_resolution;
  if (images.dim() != 4 || images.extent(1) != config_.in_channels || images.extent(2) != R ||
      images.extent(3) != R) {
    throw ShapeError("forward: expected [N, " + std::to_string(config_.in_channels) + ", " +
                     std::to_string(R) + ", " + std::to_string(R) + "], got " +
                     tensor::to_string(images.shape()));
  }
  Tensor<T> map = images;
  TokenMap<T> tokens;
  for (std::size_t s = 0; s < 3; ++s) {
    const StageSpec& spec = config_.stages[s];
    tokens = conv_token_embed(map, stages[s].embed, spec);
    if (trace) trace->stage_grids.push_back(tokens.grid);
    for (const auto& block : stages[s].blocks) tokens = attention_block(tokens, block, spec, trace);
    if (trace) trace->stage_tokens.push_back(tokens.tokens);
    if (s + 1 < 3) map = tokens_to_map(tokens);
  }
  Tensor<T> pooled = ops::mean_axis(tokens.tokens, 1);
  if (trace) trace->pooled = pooled;
  return pooled;
}

template <typename T>
Tensor<T> StageModel<T>::forward(const Tensor<T>& images, ForwardTrace<T>* trace) const {
  return ops::linear(features(images, trace), head_weight, head_bias);
}

#define KGRADE_INSTANTIATE_CVT(T)                                                              \
  template Tensor<T> tokens_to_map(const TokenMap<T>&);                                        \
  template TokenMap<T> conv_token_embed(const Tensor<T>&, const EmbedParams<T>&,               \
                                        const StageSpec&);                                     \
  template QkvProjection<T> conv_projection(const TokenMap<T>&, const AttentionParams<T>&,     \
                                            const StageSpec&);                                 \
  template TokenMap<T> attention_block(const TokenMap<T>&, const BlockParams<T>&,              \
                                       const StageSpec&, ForwardTrace<T>*);                    \
  template class StageModel<T>;

KGRADE_INSTANTIATE_CVT(float)
KGRADE_INSTANTIATE_CVT(double)

template StageModel<double> StageModel<float>::cast<double>() const;
template StageModel<float> StageModel<double>::cast<float>() const;

#undef KGRADE_INSTANTIATE_CVT

}  // namespace kgrade::model
