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


#include "kgrade/service/config.hpp"

#include <cstdlib>
#include <fstream>

#include <nlohmann/json.hpp>

namespace kgrade::service {

using model::ConfigError;

void ServiceConfig::validate() const {
  if (port < 0 || port > 65535) throw ConfigError("port must be in [0, 65535]");
  if (upload_limit_bytes == 0) throw ConfigError("upload_limit_bytes must be positive");
  if (threads == 0) throw ConfigError("threads must be positive");
  if (host.empty()) throw ConfigError("host must not be empty");
}

namespace {

AppConfig preset(const std::string& name) {
  AppConfig c;
  if (name == "tiny") {
    c.backbone = model::BackboneConfig::tiny();
  } else if (name == "cvt13") {
    c.backbone = model::BackboneConfig::cvt13();
  } else if (name == "synthetic") {
    // From-scratch training on the generated blob data: rates scaled up from
    // the fine-tuning defaults, and no vertical flips because they would
    // swap the two classes.
    c.backbone = model::BackboneConfig::tiny();
    c.train.base_lr = 1e-3;
    c.train.warmup_lr_init = 1e-4;
    c.train.min_lr = 1e-5;
    c.train.head_only = false;
    c.train.augment.vflip_prob = 0.0f;
  } else {
    throw ConfigError("unknown config preset '" + name + "'");
  }
  return c;
}

bool is_preset(const std::string& s) { return s == "tiny" || s == "cvt13" || s == "synthetic"; }

}  // namespace

AppConfig AppConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  AppConfig c;
  try {
    if (j.contains("stages")) {
      c.backbone = j.get<model::BackboneConfig>();
      c.validate();
      return c;
    }
    for (const auto& [key, value] : j.items()) {
      if (key != "backbone" && key != "train" && key != "service") {
        throw ConfigError("unknown config section '" + key + "'");
      }
    }
    if (j.contains("backbone")) {
      const auto& b = j.at("backbone");
      if (b.is_string()) {
        const auto name = b.get<std::string>();
        if (name == "synthetic") throw ConfigError("'synthetic' is not a backbone preset");
        c.backbone = preset(name).backbone;
      } else {
        c.backbone = b.get<model::BackboneConfig>();
      }
    }
    if (j.contains("train")) c.train = j.at("train").get<train::TrainConfig>();
    if (j.contains("service")) {
      const auto& s = j.at("service");
      for (const auto& [key, value] : s.items()) {
        if (key != "host" && key != "port" && key != "upload_limit_bytes" && key != "threads") {
          throw ConfigError("unknown service key '" + key + "'");
        }
      }
      c.service.host = s.value("host", c.service.host);
      c.service.port = s.value("port", c.service.port);
      c.service.upload_limit_bytes = s.value("upload_limit_bytes", c.service.upload_limit_bytes);
      c.service.threads = s.value("threads", c.service.threads);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

AppConfig AppConfig::resolve(const std::string& name_or_path) {
  if (is_preset(name_or_path)) return preset(name_or_path);
  std::ifstream in(name_or_path);
  if (!in) throw ConfigError("cannot open config " + name_or_path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed config " + name_or_path + ": " + e.what());
  }
  return from_json(j);
}

void AppConfig::apply_environment() {
  if (const char* h = std::getenv("KGRADE_HOST"); h != nullptr && *h != '\0') service.host = h;
  if (const char* p = std::getenv("KGRADE_PORT"); p != nullptr && *p != '\0') {
    char* end = nullptr;
    const long v = std::strtol(p, &end, 10);
    if (*end != '\0' || v < 0 || v > 65535) throw ConfigError(std::string("bad KGRADE_PORT '") + p + "'");
    service.port = static_cast<int>(v);
  }
}

void AppConfig::validate() const {
  backbone.validate();
  train.validate();
  service.validate();
}

nlohmann::json to_json(const AppConfig& c) {
  return nlohmann::json{{"backbone", c.backbone},
                        {"train", c.train},
                        {"service",
                         {{"host", c.service.host},
                          {"port", c.service.port},
                          {"upload_limit_bytes", c.service.upload_limit_bytes},
                          {"threads", c.service.threads}}}};
}

}  // namespace kgrade::service
