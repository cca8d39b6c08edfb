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

// Three-stage grading: purity, then shape for pure kernels, then embryo
// orientation for flat ones. Later stages run only when the earlier verdicts
// call for them.

#pragma once

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "kgrade/data/image.hpp"
#include "kgrade/model/cvt.hpp"
#include "kgrade/stage.hpp"
#include "kgrade/tensor/tensor.hpp"

namespace kgrade::cascade {

using tensor::Tensor;

using kgrade::StageMismatchError;

struct StageDecision {
  Stage stage = Stage::kPurity;
  int predicted = 0;
  /// Softmax over the two logits, in class-index order.
  std::array<double, 2> probs{0.5, 0.5};

  double confidence() const { return probs[predicted]; }
  std::string_view predicted_name() const { return class_names(stage)[predicted]; }
};

/// Softmax and argmax; an exact tie goes to class 0.
StageDecision decide(Stage stage, std::span<const float> logits);

/// Anything that maps a preprocessed [3, R, R] image to two logits.
class StageClassifier {
 public:
  virtual ~StageClassifier() = default;
  virtual Stage stage() const = 0;
  virtual std::array<float, 2> logits(const Tensor<float>& image) const = 0;
};

/// A trained StageModel. Forward passes do not touch the weights, so one
/// instance serves concurrent callers.
class ModelClassifier : public StageClassifier {
 public:
  /// Throws StageMismatchError if the model carries a different stage tag.
  ModelClassifier(model::StageModel<float> model, Stage stage);

  Stage stage() const override { return stage_; }
  std::array<float, 2> logits(const Tensor<float>& image) const override;
  const model::StageModel<float>& model() const { return model_; }

 private:
  model::StageModel<float> model_;
  Stage stage_;
};

/// Runs one stage on a preprocessed image.
StageDecision classify_stage(const StageClassifier& classifier, const Tensor<float>& image,
                             Stage stage);
StageDecision classify_stage(const model::StageModel<float>& model, const Tensor<float>& image,
                             Stage stage);

struct HierarchicalLabel {
  int y1 = 0;
  std::optional<int> y2;
  std::optional<int> y3;
  std::vector<StageDecision> decisions;

  /// e.g. "(pure, round, –)"
  std::string summary() const;
};

using Preprocess = std::function<Tensor<float>(const data::RgbImage&)>;

/// Preprocesses once and reuses the tensor for every stage that runs.
HierarchicalLabel infer_hierarchical(const StageClassifier& f1, const StageClassifier& f2,
                                     const StageClassifier& f3, const data::RgbImage& image,
                                     const Preprocess& preprocess);

/// val_transforms at the given resolution.
Preprocess val_preprocess(std::size_t resolution);

/// acc1 * acc2 * acc3, the chance all three verdicts are right if stage
/// errors are independent.
double joint_accuracy_estimate(double acc1, double acc2, double acc3);

}  // namespace kgrade::cascade
