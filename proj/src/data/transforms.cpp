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

#include "kgrade/data/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace kgrade::data {

namespace {

float luma(float r, float g, float b) { return 0.299f * r + 0.587f * g + 0.114f * b; }

float clamp01(float v) { return std::clamp(v, 0.0f, 1.0f); }

// Uniform draws through the raw engine so results do not depend on the
// standard library's distribution implementation.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

AugmentParams sample_augment(std::mt19937_64& rng, const AugmentRanges& ranges) {
  AugmentParams p;
  // Both draws are always taken so the stream does not depend on the ranges.
  p.hflip = unit(rng) < ranges.hflip_prob;
  p.vflip = unit(rng) < ranges.vflip_prob;
  const auto factor = [&] {
    return static_cast<float>(1.0 - ranges.jitter + 2.0 * ranges.jitter * unit(rng));
  };
  p.brightness = factor();
  p.contrast = factor();
  p.saturation = factor();
  p.angle_deg = static_cast<float>((2.0 * unit(rng) - 1.0) * ranges.max_rotation_deg);
  return p;
}

RgbImage hflip(const RgbImage& image) {
  RgbImage out(image.width, image.height);
  for (std::size_t r = 0; r < image.height; ++r) {
    for (std::size_t c = 0; c < image.width; ++c) {
      for (std::size_t ch = 0; ch < 3; ++ch) {
        out.at(r, image.width - 1 - c, ch) = image.at(r, c, ch);
      }
    }
  }
  return out;
}

RgbImage vflip(const RgbImage& image) {
  RgbImage out(image.width, image.height);
  const std::size_t row = image.width * 3;
  for (std::size_t r = 0; r < image.height; ++r) {
    std::copy_n(image.pixels.begin() + r * row, row,
                out.pixels.begin() + (image.height - 1 - r) * row);
  }
  return out;
}

RgbImage adjust_brightness(const RgbImage& image, float factor) {
  RgbImage out = image;
  for (float& v : out.pixels) v = clamp01(v * factor);
  return out;
}

RgbImage adjust_contrast(const RgbImage& image, float factor) {
  double mean = 0.0;
  const std::size_t n = image.width * image.height;
  for (std::size_t i = 0; i < n; ++i) {
    const float* p = &image.pixels[i * 3];
    mean += luma(p[0], p[1], p[2]);
  }
  const float m = static_cast<float>(mean / static_cast<double>(n));
  RgbImage out = image;
  for (float& v : out.pixels) v = clamp01(m + factor * (v - m));
  return out;
}

RgbImage adjust_saturation(const RgbImage& image, float factor) {
  RgbImage out = image;
  const std::size_t n = image.width * image.height;
  for (std::size_t i = 0; i < n; ++i) {
    float* p = &out.pixels[i * 3];
    const float y = luma(p[0], p[1], p[2]);
    for (int ch = 0; ch < 3; ++ch) p[ch] = clamp01(y + factor * (p[ch] - y));
  }
  return out;
}

RgbImage rotate(const RgbImage& image, float angle_deg) {
  if (angle_deg == 0.0f) return image;
  RgbImage out(image.width, image.height);
  const double a = static_cast<double>(angle_deg) * std::numbers::pi / 180.0;
  const double ca = std::cos(a), sa = std::sin(a);
  const double cx = (static_cast<double>(image.width) - 1.0) / 2.0;
  const double cy = (static_cast<double>(image.height) - 1.0) / 2.0;
  const double max_x = static_cast<double>(image.width - 1);
  const double max_y = static_cast<double>(image.height - 1);
  for (std::size_t r = 0; r < image.height; ++r) {
    for (std::size_t c = 0; c < image.width; ++c) {
      // Inverse map: rotate the destination point clockwise back into the source.
      const double dx = static_cast<double>(c) - cx;
      const double dy = static_cast<double>(r) - cy;
      const double sx = std::clamp(cx + ca * dx - sa * dy, 0.0, max_x);
      const double sy = std::clamp(cy + sa * dx + ca * dy, 0.0, max_y);
      const std::size_t x0 = static_cast<std::size_t>(std::floor(sx));
      const std::size_t y0 = static_cast<std::size_t>(std::floor(sy));
      const std::size_t x1 = std::min(x0 + 1, image.width - 1);
      const std::size_t y1 = std::min(y0 + 1, image.height - 1);
      const double wx = sx - static_cast<double>(x0), wy = sy - static_cast<double>(y0);
      for (std::size_t ch = 0; ch < 3; ++ch) {
        const double top = (1 - wx) * image.at(y0, x0, ch) + wx * image.at(y0, x1, ch);
        const double bot = (1 - wx) * image.at(y1, x0, ch) + wx * image.at(y1, x1, ch);
        out.at(r, c, ch) = static_cast<float>((1 - wy) * top + wy * bot);
      }
    }
  }
  return out;
}

RgbImage apply_augment(const RgbImage& image, const AugmentParams& params) {
  RgbImage out = image;
  if (params.hflip) out = hflip(out);
  if (params.vflip) out = vflip(out);
  if (params.brightness != 1.0f) out = adjust_brightness(out, params.brightness);
  if (params.contrast != 1.0f) out = adjust_contrast(out, params.contrast);
  if (params.saturation != 1.0f) out = adjust_saturation(out, params.saturation);
  if (params.angle_deg != 0.0f) out = rotate(out, params.angle_deg);
  return out;
}

tensor::Tensor<float> normalize(const RgbImage& image) {
  const std::size_t H = image.height, W = image.width;
  std::vector<float> chw(3 * H * W);
  for (std::size_t ch = 0; ch < 3; ++ch) {
    for (std::size_t i = 0; i < H * W; ++i) {
      chw[ch * H * W + i] = (image.pixels[i * 3 + ch] - kImageNetMean[ch]) / kImageNetStd[ch];
    }
  }
  return tensor::Tensor<float>({3, H, W}, std::move(chw));
}

RgbImage denormalize(const tensor::Tensor<float>& chw) {
  if (chw.dim() != 3 || chw.extent(0) != 3) throw ImageError("denormalize expects [3, H, W]");
  const std::size_t H = chw.extent(1), W = chw.extent(2);
  RgbImage out(W, H);
  const auto d = chw.data();
  for (std::size_t ch = 0; ch < 3; ++ch) {
    for (std::size_t i = 0; i < H * W; ++i) {
      out.pixels[i * 3 + ch] = d[ch * H * W + i] * kImageNetStd[ch] + kImageNetMean[ch];
    }
  }
  return out;
}

tensor::Tensor<float> val_transforms(const RgbImage& image, std::size_t resolution) {
  return normalize(resize_bilinear(image, resolution, resolution));
}

tensor::Tensor<float> train_transforms(const RgbImage& image, std::size_t resolution,
                                       const AugmentParams& params) {
  return normalize(apply_augment(resize_bilinear(image, resolution, resolution), params));
}

tensor::Tensor<float> train_transforms(const RgbImage& image, std::size_t resolution,
                                       std::mt19937_64& rng, const AugmentRanges& ranges) {
  return train_transforms(image, resolution, sample_augment(rng, ranges));
}

}  // namespace kgrade::data
