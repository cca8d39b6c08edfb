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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>

#include <nlohmann/json_fwd.hpp>

#include "kgrade/data/transforms.hpp"

namespace kgrade::train {

class TrainConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct TrainConfig {
  double base_lr = 1e-4;
  double weight_decay = 0.05;
  double label_smoothing = 0.1;
  std::size_t total_epochs = 20;
  std::size_t warmup_epochs = 5;
  double warmup_lr_init = 1e-5;
  double min_lr = 1e-6;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  /// Freeze everything except the classification head.
  bool head_only = true;
  data::AugmentRanges augment{};

  void validate() const;
  static TrainConfig load(const std::filesystem::path& path);
  bool operator==(const TrainConfig&) const = default;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
/// Missing keys keep their defaults; unknown keys are rejected.
void from_json(const nlohmann::json& j, TrainConfig& c);

/// Learning rate at a (possibly fractional) epoch in [0, total_epochs]:
/// linear warmup from warmup_lr_init to base_lr, then a half cosine down
/// to min_lr. Endpoints are returned exactly.
double cosine_lr(double epoch, const TrainConfig& config);

}  // namespace kgrade::train
