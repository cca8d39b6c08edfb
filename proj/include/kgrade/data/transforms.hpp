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

// Preprocessing and augmentation. Fixed order:
// resize -> flips -> jitter -> rotation -> normalize.

#pragma once

#include <array>
#include <cstdint>
#include <random>

#include "kgrade/data/image.hpp"
#include "kgrade/tensor/tensor.hpp"

namespace kgrade::data {

inline constexpr std::array<float, 3> kImageNetMean{0.485f, 0.456f, 0.406f};
inline constexpr std::array<float, 3> kImageNetStd{0.229f, 0.224f, 0.225f};

struct AugmentParams {
  bool hflip = false;
  bool vflip = false;
  float brightness = 1.0f;
  float contrast = 1.0f;
  float saturation = 1.0f;
  float angle_deg = 0.0f;

  bool is_identity() const {
    return !hflip && !vflip && brightness == 1.0f && contrast == 1.0f && saturation == 1.0f &&
           angle_deg == 0.0f;
  }
};

struct AugmentRanges {
  float hflip_prob = 0.5f;
  float vflip_prob = 0.5f;
  float jitter = 0.2f;
  float max_rotation_deg = 15.0f;
  bool operator==(const AugmentRanges&) const = default;
};

AugmentParams sample_augment(std::mt19937_64& rng, const AugmentRanges& ranges = {});

RgbImage hflip(const RgbImage& image);
RgbImage vflip(const RgbImage& image);
RgbImage adjust_brightness(const RgbImage& image, float factor);
/// Blends toward the mean Rec. 601 luma of the whole image.
RgbImage adjust_contrast(const RgbImage& image, float factor);
/// Blends toward each pixel's Rec. 601 luma.
RgbImage adjust_saturation(const RgbImage& image, float factor);
/// Counter-clockwise about the image center, bilinear, edge-replicated.
RgbImage rotate(const RgbImage& image, float angle_deg);

/// Flips, jitter and rotation on an already resized image, before normalization.
RgbImage apply_augment(const RgbImage& image, const AugmentParams& params);

/// [3, H, W] tensor with per-channel (x - mean) / std.
tensor::Tensor<float> normalize(const RgbImage& image);
RgbImage denormalize(const tensor::Tensor<float>& chw);

tensor::Tensor<float> val_transforms(const RgbImage& image, std::size_t resolution);
tensor::Tensor<float> train_transforms(const RgbImage& image, std::size_t resolution,
                                       std::mt19937_64& rng, const AugmentRanges& ranges = {});
tensor::Tensor<float> train_transforms(const RgbImage& image, std::size_t resolution,
                                       const AugmentParams& params);

}  // namespace kgrade::data
