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
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "kgrade/model/config.hpp"
#include "kgrade/train/config.hpp"

namespace kgrade::service {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::size_t upload_limit_bytes = 10 * 1024 * 1024;
  std::size_t threads = 4;

  void validate() const;
  bool operator==(const ServiceConfig&) const = default;
};

/// Everything a command reads from its --config argument.
struct AppConfig {
  model::BackboneConfig backbone = model::BackboneConfig::tiny();
  train::TrainConfig train{};
  ServiceConfig service{};

  /// "tiny", "cvt13", "synthetic" or a JSON file. A file holding a bare
  /// backbone (it has a "stages" key) keeps the other sections at defaults;
  /// otherwise the file may carry "backbone" (a preset name or an object),
  /// "train" and "service" sections.
  static AppConfig resolve(const std::string& name_or_path);
  static AppConfig from_json(const nlohmann::json& j);

  /// KGRADE_HOST / KGRADE_PORT, when set, replace the service address.
  void apply_environment();

  void validate() const;
};

nlohmann::json to_json(const AppConfig& c);

}  // namespace kgrade::service
