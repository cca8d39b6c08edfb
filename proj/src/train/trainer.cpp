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


#include "kgrade/train/trainer.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <string>

#include "kgrade/tensor/tape.hpp"
#include "kgrade/train/loss.hpp"

namespace kgrade::train {

namespace {

std::vector<Tensor<float>> trainable_tensors(const model::StageModel<float>& model) {
  std::vector<Tensor<float>> out;
  for (auto& p : model.parameters()) {
    if (p.tensor.requires_grad()) out.push_back(p.tensor);
  }
  return out;
}

std::vector<std::string> stage_classes(Stage stage) {
  const auto names = class_names(stage);
  return {std::string(names[0]), std::string(names[1])};
}

void check_labels(const data::ImageSet& set, const char* what) {
  if (set.size() == 0) throw TrainError(std::string(what) + " split is empty");
  for (std::size_t i = 0; i < set.labels.size(); ++i) {
    if (set.labels[i] != 0 && set.labels[i] != 1) {
      throw TrainError(std::string(what) + " label " + std::to_string(set.labels[i]) + " of " +
                       set.paths.at(i) + " is not 0 or 1");
    }
  }
}

}  // namespace

bool better_epoch(const EpochRecord& candidate, const EpochRecord& incumbent) {
  if (candidate.val_acc != incumbent.val_acc) return candidate.val_acc > incumbent.val_acc;
  return candidate.val_macro_f1 > incumbent.val_macro_f1;
}

double train_step(model::StageModel<float>& model, const Tensor<float>& images,
                  const std::vector<int>& labels, OptimizerState& state, double lr,
                  const TrainConfig& config) {
  auto params = trainable_tensors(model);
  if (params.empty()) throw TrainError("model has no trainable parameters");
  for (auto& p : params) p.clear_grad();

  tensor::GradTape<float> tape;
  Tensor<float> loss;
  {
    auto recording = tape.record();
    const auto logits = model.forward(images);
    const auto targets = smooth_target_batch<float>(labels, kNumClasses, config.label_smoothing);
    loss = soft_cross_entropy(logits, targets);
    tape.backward(loss);
  }
  adamw_step(params, state, lr, config.weight_decay);
  return static_cast<double>(loss.item());
}

Evaluation evaluate(const model::StageModel<float>& model, const data::ImageSet& set, Stage stage,
                    std::size_t batch_size) {
  if (set.size() == 0) throw TrainError("cannot evaluate on an empty split");
  if (batch_size == 0) batch_size = 1;
  Evaluation ev;
  ev.predictions.reserve(set.size());
  for (std::size_t start = 0; start < set.size(); start += batch_size) {
    std::vector<std::size_t> idx(std::min(batch_size, set.size() - start));
    std::iota(idx.begin(), idx.end(), start);
    const auto logits = model.forward(data::val_batch(set, idx));
    const auto l = logits.data();
    for (std::size_t i = 0; i < idx.size(); ++i) {
      ev.predictions.push_back(l[2 * i + 1] > l[2 * i] ? 1 : 0);
    }
  }
  ev.report = metrics::report(ev.predictions, set.labels, stage_classes(stage));
  return ev;
}

TrainResult train_stage(Stage stage, const data::ImageSet& train_set, const data::ImageSet& val_set,
                        model::StageModel<float> model, const TrainConfig& config,
                        const EpochCallback& on_epoch) {
  config.validate();
  check_labels(train_set, "train");
  check_labels(val_set, "validation");
  if (model.stage() && *model.stage() != stage) {
    throw StageMismatchError("model is tagged for stage " + std::to_string(to_int(*model.stage())) +
                             ", training stage " + std::to_string(to_int(stage)));
  }
  model.set_stage(stage);
  if (config.head_only) {
    model.freeze_backbone();
  } else {
    model.unfreeze_all();
  }

  // Separate streams so the batch order does not depend on how many draws
  // augmentation consumes.
  std::seed_seq shuffle_seq{config.seed, std::uint64_t{1}};
  std::seed_seq augment_seq{config.seed, std::uint64_t{2}};
  std::mt19937_64 shuffle_rng(shuffle_seq);
  std::mt19937_64 augment_rng(augment_seq);

  OptimizerState state;
  TrainResult result{model.clone(), {}, 0};
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 1; epoch <= config.total_epochs; ++epoch) {
    const double lr = cosine_lr(static_cast<double>(epoch - 1), config);
    for (std::size_t i = order.size() - 1; i > 0; --i) {
      std::swap(order[i], order[static_cast<std::size_t>(shuffle_rng() % (i + 1))]);
    }
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                   order.begin() + static_cast<std::ptrdiff_t>(end));
      std::vector<int> labels;
      labels.reserve(idx.size());
      for (auto k : idx) labels.push_back(train_set.labels[k]);
      const auto images = data::train_batch(train_set, idx, augment_rng, config.augment);
      loss_sum += train_step(model, images, labels, state, lr, config) * static_cast<double>(idx.size());
    }

    const auto ev = evaluate(model, val_set, stage, config.batch_size);
    EpochRecord rec{epoch, lr, loss_sum / static_cast<double>(order.size()), ev.report.accuracy,
                    ev.report.macro.f1};
    if (result.best_epoch == 0 || better_epoch(rec, result.history.epochs[result.best_epoch - 1])) {
      result.best = model.clone();
      result.best_epoch = epoch;
    }
    result.history.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  return result;
}

}  // namespace kgrade::train
