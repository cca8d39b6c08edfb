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

// Separable toy data for end-to-end checks: a noisy gray field with one
// bright Gaussian blob, in the top half for class 1 and the bottom half for
// class 0.

#pragma once

#include <cstdint>
#include <filesystem>
#include <random>

#include "kgrade/data/image.hpp"
#include "kgrade/data/manifest.hpp"

namespace kgrade::data {

struct SyntheticSpec {
  std::size_t size = 64;
  // Per class; totals are twice these.
  std::size_t train_per_class = 200;
  std::size_t val_per_class = 50;
  std::size_t test_per_class = 50;
  double noise_std = 0.05;
  std::uint64_t seed = 0;
};

RgbImage synthetic_image(int label, std::size_t size, double noise_std, std::mt19937_64& rng);

/// Writes root/<split>/<class>/NNNN.png and root/manifest.csv (paths relative
/// to root, splits pre-assigned). Returns the manifest with absolute paths.
DatasetManifest generate_synthetic(const std::filesystem::path& root, Stage stage,
                                   const SyntheticSpec& spec);

}  // namespace kgrade::data
