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
#include <functional>
#include <vector>

#include "kgrade/data/dataset.hpp"
#include "kgrade/metrics/metrics.hpp"
#include "kgrade/model/cvt.hpp"
#include "kgrade/stage.hpp"
#include "kgrade/train/config.hpp"
#include "kgrade/train/history.hpp"
#include "kgrade/train/optimizer.hpp"

namespace kgrade::train {

class TrainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Forward, soft cross-entropy on smoothed targets, backward, one AdamW
/// update of the trainable parameters. Returns the batch loss.
double train_step(model::StageModel<float>& model, const Tensor<float>& images,
                  const std::vector<int>& labels, OptimizerState& state, double lr,
                  const TrainConfig& config);

struct Evaluation {
  std::vector<int> predictions;
  metrics::ClassificationReport report;
};

/// Deterministic (val_transforms) evaluation in batches; ties go to class 0.
Evaluation evaluate(const model::StageModel<float>& model, const data::ImageSet& set, Stage stage,
                    std::size_t batch_size = 32);

struct TrainResult {
  model::StageModel<float> best;
  TrainHistory history;
  std::size_t best_epoch = 0;  // 1-based
};

/// Model selection order: higher validation accuracy, then higher macro-F1.
/// Returns false on a full tie so the earlier epoch is kept.
bool better_epoch(const EpochRecord& candidate, const EpochRecord& incumbent);

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Stage-wise training. The model is frozen to its head when
/// config.head_only is set, otherwise every parameter trains. Epoch e
/// (1-based) runs at cosine_lr(e - 1). The returned model is a copy taken
/// at the epoch with the best validation accuracy, ties broken by higher
/// macro-F1 and then by the earlier epoch.
TrainResult train_stage(Stage stage, const data::ImageSet& train_set, const data::ImageSet& val_set,
                        model::StageModel<float> model, const TrainConfig& config,
                        const EpochCallback& on_epoch = {});

}  // namespace kgrade::train
