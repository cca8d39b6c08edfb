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

#include <cstdint>
#include <random>
#include <vector>

#include "kgrade/data/image.hpp"
#include "kgrade/data/manifest.hpp"
#include "kgrade/data/transforms.hpp"
#include "kgrade/tensor/tensor.hpp"

namespace kgrade::data {

/// One split decoded and resized to the model resolution. Resizing is the
/// first transform in both pipelines, so caching its output is exact.
struct ImageSet {
  std::size_t resolution = 0;
  std::vector<RgbImage> images;
  std::vector<int> labels;
  std::vector<std::string> paths;

  std::size_t size() const { return images.size(); }
};

ImageSet load_split(const DatasetManifest& manifest, Split split, std::size_t resolution);

/// Stacks val_transforms outputs for the given indices into [B, 3, R, R].
tensor::Tensor<float> val_batch(const ImageSet& set, const std::vector<std::size_t>& indices);

/// Same with augmentation. Draws for each image come from the engine in
/// index order.
tensor::Tensor<float> train_batch(const ImageSet& set, const std::vector<std::size_t>& indices,
                                  std::mt19937_64& rng, const AugmentRanges& ranges = {});

}  // namespace kgrade::data
