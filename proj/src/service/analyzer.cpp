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


#include "kgrade/service/analyzer.hpp"

#include <span>

#include "kgrade/data/transforms.hpp"
#include "kgrade/train/checkpoint.hpp"

namespace kgrade::service {

namespace {

constexpr std::array<Stage, 3> kStages{Stage::kPurity, Stage::kShape, Stage::kOrientation};

std::string stage_key(Stage s) { return "stage" + std::to_string(to_int(s)); }

nlohmann::json decision_json(const cascade::StageDecision& d) {
  const auto names = class_names(d.stage);
  nlohmann::json probs = nlohmann::json::object();
  probs[std::string(names[0])] = d.probs[0];
  probs[std::string(names[1])] = d.probs[1];
  return nlohmann::json{{"status", "predicted"},
                        {"prediction", std::string(d.predicted_name())},
                        {"confidence", d.confidence()},
                        {"probabilities", probs}};
}

}  // namespace

StageModels load_stage_models(const std::array<std::filesystem::path, 3>& checkpoints) {
  StageModels out;
  std::size_t resolution = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const Stage stage = kStages[i];
    const auto& path = checkpoints[i];
    try {
      if (path.empty()) throw std::runtime_error("no checkpoint path given");
      if (!std::filesystem::exists(path)) throw std::runtime_error(path.string() + " does not exist");
      auto ck = train::load_checkpoint(path, stage);
      const std::size_t r = ck.model.config().input_resolution;
      if (resolution != 0 && r != resolution) {
        throw std::runtime_error("input resolution " + std::to_string(r) + " differs from stage 1's " +
                                 std::to_string(resolution));
      }
      resolution = r;
      out.classifiers[i] = std::make_shared<cascade::ModelClassifier>(std::move(ck.model), stage);
      out.versions[i] = "sha256:" + train::file_sha256(path);
    } catch (const std::exception& e) {
      throw ModelLoadError(stage, e.what());
    }
  }
  out.preprocess = cascade::val_preprocess(resolution);
  return out;
}

ApiResult api_error(int status, std::string_view code, std::string_view message) {
  return {status, nlohmann::json{{"error", {{"code", code}, {"message", message}}}}};
}

nlohmann::json analyze_response(const cascade::HierarchicalLabel& label,
                                const nlohmann::json& model_versions) {
  nlohmann::json out = nlohmann::json::object();
  for (Stage s : kStages) out[stage_key(s)] = nlohmann::json{{"status", "not_applicable"}};
  for (const auto& d : label.decisions) out[stage_key(d.stage)] = decision_json(d);
  out["summary"] = label.summary();
  out["model_versions"] = model_versions;
  return out;
}

Analyzer::Analyzer(StageModels models) : models_(std::move(models)) {
  for (std::size_t i = 0; i < 3; ++i) {
    if (!models_.classifiers[i]) throw std::invalid_argument("missing classifier for " + stage_key(kStages[i]));
    if (models_.classifiers[i]->stage() != kStages[i]) {
      throw StageMismatchError(stage_key(kStages[i]) + " slot holds a stage " +
                               std::to_string(to_int(models_.classifiers[i]->stage())) + " classifier");
    }
  }
  if (!models_.preprocess) throw std::invalid_argument("missing preprocess");
}

nlohmann::json Analyzer::model_versions() const {
  nlohmann::json v = nlohmann::json::object();
  for (std::size_t i = 0; i < 3; ++i) v[stage_key(kStages[i])] = models_.versions[i];
  return v;
}

nlohmann::json Analyzer::health() const {
  return nlohmann::json{{"status", "ok"}, {"model_versions", model_versions()}};
}

nlohmann::json Analyzer::analyze(const data::RgbImage& image) const {
  const auto label = cascade::infer_hierarchical(*models_.classifiers[0], *models_.classifiers[1],
                                                 *models_.classifiers[2], image, models_.preprocess);
  return analyze_response(label, model_versions());
}

ApiResult Analyzer::analyze_upload(std::string_view bytes, std::size_t limit_bytes) const {
  if (bytes.empty()) return api_error(400, "missing_image", "the 'image' field is empty");
  if (bytes.size() > limit_bytes) {
    return api_error(413, "image_too_large",
                     "image is " + std::to_string(bytes.size()) + " bytes; the limit is " +
                         std::to_string(limit_bytes));
  }
  data::RgbImage image;
  try {
    image = data::decode_image(
        std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
  } catch (const data::ImageError& e) {
    return api_error(400, "invalid_image", e.what());
  }
  try {
    return {200, analyze(image)};
  } catch (const std::exception& e) {
    return api_error(500, "internal_error", e.what());
  }
}

}  // namespace kgrade::service
