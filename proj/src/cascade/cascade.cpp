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

#include "kgrade/cascade/cascade.hpp"

#include <algorithm>
#include <cmath>

#include "kgrade/data/transforms.hpp"
#include "kgrade/tensor/ops.hpp"

namespace kgrade::cascade {

StageDecision decide(Stage stage, std::span<const float> logits) {
  if (logits.size() != 2) throw ShapeError("stage decision needs exactly 2 logits");
  if (!std::isfinite(logits[0]) || !std::isfinite(logits[1])) {
    throw NumericError("non-finite logits");
  }
  StageDecision d;
  d.stage = stage;
  const double a = logits[0], b = logits[1];
  const double m = std::max(a, b);
  const double ea = std::exp(a - m), eb = std::exp(b - m);
  d.probs = {ea / (ea + eb), eb / (ea + eb)};
  d.predicted = d.probs[1] > d.probs[0] ? 1 : 0;
  return d;
}

ModelClassifier::ModelClassifier(model::StageModel<float> model, Stage stage)
    : model_(std::move(model)), stage_(stage) {
  if (model_.stage() && *model_.stage() != stage) {
    throw StageMismatchError("model is tagged for stage " + std::to_string(to_int(*model_.stage())) +
                             " but was loaded as stage " + std::to_string(to_int(stage)));
  }
}

std::array<float, 2> ModelClassifier::logits(const Tensor<float>& image) const {
  Tensor<float> batch = image;
  if (image.dim() == 3) {
    batch = tensor::reshape(image, {1, image.extent(0), image.extent(1), image.extent(2)});
  }
  const auto out = model_.forward(batch);
  if (out.numel() != 2) throw ShapeError("classifier expects a single image");
  return {out.data()[0], out.data()[1]};
}

StageDecision classify_stage(const StageClassifier& classifier, const Tensor<float>& image,
                             Stage stage) {
  if (classifier.stage() != stage) {
    throw StageMismatchError("stage " + std::to_string(to_int(stage)) +
                             " requested from a stage " + std::to_string(to_int(classifier.stage())) +
                             " classifier");
  }
  const auto l = classifier.logits(image);
  return decide(stage, l);
}

StageDecision classify_stage(const model::StageModel<float>& model, const Tensor<float>& image,
                             Stage stage) {
  return classify_stage(ModelClassifier(model, stage), image, stage);
}

std::string HierarchicalLabel::summary() const {
  static constexpr const char* kUndefined = "–";
  std::string s = "(";
  s += class_names(Stage::kPurity)[y1];
  s += ", ";
  s += y2 ? std::string(class_names(Stage::kShape)[*y2]) : kUndefined;
  s += ", ";
  s += y3 ? std::string(class_names(Stage::kOrientation)[*y3]) : kUndefined;
  return s + ")";
}

HierarchicalLabel infer_hierarchical(const StageClassifier& f1, const StageClassifier& f2,
                                     const StageClassifier& f3, const data::RgbImage& image,
                                     const Preprocess& preprocess) {
  if (image.empty()) throw data::ImageError("empty image");
  const Tensor<float> x = preprocess(image);
  HierarchicalLabel out;

  const StageDecision d1 = classify_stage(f1, x, Stage::kPurity);
  out.decisions.push_back(d1);
  out.y1 = d1.predicted;
  if (d1.predicted_name() == "impure") return out;

  const StageDecision d2 = classify_stage(f2, x, Stage::kShape);
  out.decisions.push_back(d2);
  out.y2 = d2.predicted;
  if (d2.predicted_name() == "round") return out;

  const StageDecision d3 = classify_stage(f3, x, Stage::kOrientation);
  out.decisions.push_back(d3);
  out.y3 = d3.predicted;
  return out;
}

Preprocess val_preprocess(std::size_t resolution) {
  return [resolution](const data::RgbImage& img) { return data::val_transforms(img, resolution); };
}

double joint_accuracy_estimate(double acc1, double acc2, double acc3) {
  for (double a : {acc1, acc2, acc3}) {
    if (!(a >= 0.0 && a <= 1.0)) throw std::out_of_range("stage accuracy must lie in [0, 1]");
  }
  return acc1 * acc2 * acc3;
}

}  // namespace kgrade::cascade
