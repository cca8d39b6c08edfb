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

#include "kgrade/data/dataset.hpp"

#include <algorithm>

#include "kgrade/data/transforms.hpp"

namespace kgrade::data {

ImageSet load_split(const DatasetManifest& manifest, Split split, std::size_t resolution) {
  ImageSet set;
  set.resolution = resolution;
  for (const auto& r : manifest.subset(split)) {
    set.images.push_back(resize_bilinear(read_image(r.path), resolution, resolution));
    set.labels.push_back(r.label);
    set.paths.push_back(r.path);
  }
  return set;
}

namespace {

template <typename Fn>
tensor::Tensor<float> stack(const ImageSet& set, const std::vector<std::size_t>& indices, Fn&& fn) {
  const std::size_t R = set.resolution, plane = 3 * R * R;
  std::vector<float> out(indices.size() * plane);
  for (std::size_t b = 0; b < indices.size(); ++b) {
    const auto t = fn(set.images.at(indices[b]));
    std::copy(t.data().begin(), t.data().end(), out.begin() + b * plane);
  }
  return tensor::Tensor<float>({indices.size(), 3, R, R}, std::move(out));
}

}  // namespace

tensor::Tensor<float> val_batch(const ImageSet& set, const std::vector<std::size_t>& indices) {
  return stack(set, indices, [](const RgbImage& img) { return normalize(img); });
}

tensor::Tensor<float> train_batch(const ImageSet& set, const std::vector<std::size_t>& indices,
                                  std::mt19937_64& rng, const AugmentRanges& ranges) {
  return stack(set, indices, [&](const RgbImage& img) {
    return normalize(apply_augment(img, sample_augment(rng, ranges)));
  });
}

}  // namespace kgrade::data
