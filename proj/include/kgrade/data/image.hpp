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

// Decoded RGB images and the codecs we read (PNG, JPEG, binary PPM).

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace kgrade::data {

class ImageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Interleaved RGB, row-major HWC, values in [0, 1].
struct RgbImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<float> pixels;

  RgbImage() = default;
  RgbImage(std::size_t w, std::size_t h, float fill = 0.0f)
      : width(w), height(h), pixels(w * h * 3, fill) {}

  float& at(std::size_t r, std::size_t c, std::size_t ch) { return pixels[(r * width + c) * 3 + ch]; }
  float at(std::size_t r, std::size_t c, std::size_t ch) const {
    return pixels[(r * width + c) * 3 + ch];
  }
  bool empty() const { return pixels.empty(); }
};

enum class ImageFormat { kUnknown, kPng, kJpeg, kPpm };

/// Sniffs the leading magic bytes.
ImageFormat detect_format(std::span<const std::uint8_t> bytes);

RgbImage decode_image(std::span<const std::uint8_t> bytes);
RgbImage read_image(const std::filesystem::path& path);

/// 8-bit RGB PNG.
std::vector<std::uint8_t> encode_png(const RgbImage& image);
void write_png(const std::filesystem::path& path, const RgbImage& image);

/// Extensions build_manifest will try to decode.
bool has_image_extension(const std::filesystem::path& path);

/// Bilinear resize with half-pixel centers. Same size returns a copy.
RgbImage resize_bilinear(const RgbImage& image, std::size_t width, std::size_t height);

}  // namespace kgrade::data
