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


#include "kgrade/train/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <string>

#include <nlohmann/json.hpp>

namespace kgrade::train {

void TrainConfig::validate() const {
  if (total_epochs < 1) throw TrainConfigError("total_epochs must be >= 1");
  if (warmup_epochs >= total_epochs) throw TrainConfigError("warmup_epochs must be < total_epochs");
  if (!(label_smoothing >= 0.0 && label_smoothing < 1.0)) {
    throw TrainConfigError("label_smoothing must be in [0, 1)");
  }
  if (!(min_lr >= 0.0 && min_lr <= warmup_lr_init && warmup_lr_init <= base_lr)) {
    throw TrainConfigError("need 0 <= min_lr <= warmup_lr_init <= base_lr");
  }
  if (!(weight_decay >= 0.0)) throw TrainConfigError("weight_decay must be >= 0");
  if (batch_size < 1) throw TrainConfigError("batch_size must be >= 1");
  const auto prob = [](float p) { return p >= 0.0f && p <= 1.0f; };
  if (!prob(augment.hflip_prob) || !prob(augment.vflip_prob)) {
    throw TrainConfigError("flip probabilities must be in [0, 1]");
  }
  if (!(augment.jitter >= 0.0f && augment.jitter < 1.0f)) throw TrainConfigError("jitter must be in [0, 1)");
  if (!(augment.max_rotation_deg >= 0.0f)) throw TrainConfigError("max_rotation_deg must be >= 0");
}

TrainConfig TrainConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw TrainConfigError("cannot open training config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw TrainConfigError("malformed training config " + path.string() + ": " + e.what());
  }
  TrainConfig c = j.get<TrainConfig>();
  c.validate();
  return c;
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"base_lr", c.base_lr},
                     {"weight_decay", c.weight_decay},
                     {"label_smoothing", c.label_smoothing},
                     {"total_epochs", c.total_epochs},
                     {"warmup_epochs", c.warmup_epochs},
                     {"warmup_lr_init", c.warmup_lr_init},
                     {"min_lr", c.min_lr},
                     {"batch_size", c.batch_size},
                     {"seed", c.seed},
                     {"head_only", c.head_only},
                     {"augment",
                      {{"hflip_prob", c.augment.hflip_prob},
                       {"vflip_prob", c.augment.vflip_prob},
                       {"jitter", c.augment.jitter},
                       {"max_rotation_deg", c.augment.max_rotation_deg}}}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  if (!j.is_object()) throw TrainConfigError("training config must be an object");
  static const nlohmann::json known = TrainConfig{};
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw TrainConfigError("unknown training config key '" + key + "'");
  }
  try {
    c.base_lr = j.value("base_lr", c.base_lr);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.label_smoothing = j.value("label_smoothing", c.label_smoothing);
    c.total_epochs = j.value("total_epochs", c.total_epochs);
    c.warmup_epochs = j.value("warmup_epochs", c.warmup_epochs);
    c.warmup_lr_init = j.value("warmup_lr_init", c.warmup_lr_init);
    c.min_lr = j.value("min_lr", c.min_lr);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.seed = j.value("seed", c.seed);
    c.head_only = j.value("head_only", c.head_only);
    if (j.contains("augment")) {
      const auto& a = j.at("augment");
      for (const auto& [key, value] : a.items()) {
        if (!known.at("augment").contains(key)) {
          throw TrainConfigError("unknown augment key '" + key + "'");
        }
      }
      c.augment.hflip_prob = a.value("hflip_prob", c.augment.hflip_prob);
      c.augment.vflip_prob = a.value("vflip_prob", c.augment.vflip_prob);
      c.augment.jitter = a.value("jitter", c.augment.jitter);
      c.augment.max_rotation_deg = a.value("max_rotation_deg", c.augment.max_rotation_deg);
    }
  } catch (const nlohmann::json::exception& e) {
    throw TrainConfigError(std::string("training config: ") + e.what());
  }
}

double cosine_lr(double epoch, const TrainConfig& config) {
  const double T = static_cast<double>(config.total_epochs);
  const double W = static_cast<double>(config.warmup_epochs);
  if (!(epoch >= 0.0 && epoch <= T)) {
    throw std::out_of_range("epoch " + std::to_string(epoch) + " outside [0, " +
                            std::to_string(config.total_epochs) + "]");
  }
  // Written as interpolations so that t = 0 and t = 1 give the endpoint
  // values bit-exactly.
  if (epoch < W) {
    const double t = epoch / W;
    return (1.0 - t) * config.warmup_lr_init + t * config.base_lr;
  }
  const double t = (epoch - W) / (T - W);
  const double c = 0.5 * (1.0 + std::cos(std::numbers::pi * t));
  if (t == 1.0) return config.min_lr;
  return config.min_lr * (1.0 - c) + config.base_lr * c;
}

}  // namespace kgrade::train
