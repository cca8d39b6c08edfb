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


// Request-independent core of the inference service: model loading, the
// AnalyzeResponse schema and upload validation. The HTTP layer only moves
// bytes in and out of this.

#pragma once

#include <array>
#include <filesystem>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "kgrade/cascade/cascade.hpp"

namespace kgrade::service {

/// A stage checkpoint could not be loaded; the message names the stage.
class ModelLoadError : public std::runtime_error {
 public:
  ModelLoadError(Stage stage, const std::string& what)
      : std::runtime_error("stage " + std::to_string(to_int(stage)) + " (" +
                           std::string(stage_name(stage)) + ") checkpoint: " + what),
        stage_(stage) {}
  Stage stage() const { return stage_; }

 private:
  Stage stage_;
};

struct StageModels {
  std::array<std::shared_ptr<const cascade::StageClassifier>, 3> classifiers;
  /// Reported under model_versions; the checkpoint SHA-256 for real models.
  std::array<std::string, 3> versions;
  cascade::Preprocess preprocess;
};

/// Loads and tag-checks the three checkpoints. All three must share one
/// input resolution since the image is preprocessed once.
StageModels load_stage_models(const std::array<std::filesystem::path, 3>& checkpoints);

/// An HTTP status with a JSON body.
struct ApiResult {
  int status = 200;
  nlohmann::json body;
};

/// {"error": {"code": ..., "message": ...}}
ApiResult api_error(int status, std::string_view code, std::string_view message);

class Analyzer {
 public:
  explicit Analyzer(StageModels models);

  /// AnalyzeResponse for one decoded image.
  nlohmann::json analyze(const data::RgbImage& image) const;

  /// Validates and decodes raw upload bytes, then analyzes. Never throws
  /// for bad input; internal faults become 500.
  ApiResult analyze_upload(std::string_view bytes, std::size_t limit_bytes) const;

  nlohmann::json health() const;
  nlohmann::json model_versions() const;

 private:
  StageModels models_;
};

/// Renders a cascade result in the response schema.
nlohmann::json analyze_response(const cascade::HierarchicalLabel& label,
                                const nlohmann::json& model_versions);

}  // namespace kgrade::service
