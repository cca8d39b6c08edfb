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

#include "kgrade/data/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace kgrade::data {

namespace fs = std::filesystem;

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Box-Muller on the raw engine, for output that is stable across toolchains.
double gaussian(std::mt19937_64& rng) {
  const double u1 = std::max(uniform(rng, 0.0, 1.0), 1e-300);
  const double u2 = uniform(rng, 0.0, 1.0);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

}  // namespace

RgbImage synthetic_image(int label, std::size_t size, double noise_std, std::mt19937_64& rng) {
  const double s = static_cast<double>(size);
  const double margin = s / 8.0;
  const double cx = uniform(rng, margin, s - margin);
  const double cy = label == 1 ? uniform(rng, margin, s / 2 - margin / 2)
                               : uniform(rng, s / 2 + margin / 2, s - margin);
  const double sigma = uniform(rng, s / 16.0, s / 10.0);
  const double amp = uniform(rng, 0.45, 0.65);
  const double background = uniform(rng, 0.25, 0.40);
  double tint[3];
  for (double& t : tint) t = uniform(rng, 0.85, 1.0);

  RgbImage img(size, size);
  for (std::size_t r = 0; r < size; ++r) {
    for (std::size_t c = 0; c < size; ++c) {
      const double dx = static_cast<double>(c) - cx, dy = static_cast<double>(r) - cy;
      const double blob = amp * std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma));
      for (std::size_t ch = 0; ch < 3; ++ch) {
        const double v = background + blob * tint[ch] + noise_std * gaussian(rng);
        img.at(r, c, ch) = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  }
  return img;
}

DatasetManifest generate_synthetic(const fs::path& root, Stage stage, const SyntheticSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  DatasetManifest m;
  m.stage = stage;
  const auto names = class_names(stage);
  const std::pair<Split, std::size_t> plan[] = {{Split::kTrain, spec.train_per_class},
                                                {Split::kVal, spec.val_per_class},
                                                {Split::kTest, spec.test_per_class}};
  DatasetManifest relative = m;
  for (const auto& [split, per_class] : plan) {
    for (int label = 0; label < kNumClasses; ++label) {
      const fs::path dir = fs::path(std::string(split_name(split))) / std::string(names[label]);
      fs::create_directories(root / dir);
      for (std::size_t i = 0; i < per_class; ++i) {
        char file[32];
        std::snprintf(file, sizeof(file), "%04zu.png", i);
        const fs::path rel = dir / file;
        write_png(root / rel, synthetic_image(label, spec.size, spec.noise_std, rng));
        relative.records.push_back({rel.generic_string(), stage, label, split});
        m.records.push_back(
            {fs::absolute(root / rel).lexically_normal().string(), stage, label, split});
      }
    }
  }
  write_manifest_csv(relative, root / "manifest.csv");
  return m;
}

}  // namespace kgrade::data
