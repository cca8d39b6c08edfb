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


// The work behind each command-line subcommand, kept out of main() so it
// can be tested in-process.

#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>

#include "kgrade/data/manifest.hpp"
#include "kgrade/data/synthetic.hpp"
#include "kgrade/metrics/metrics.hpp"
#include "kgrade/service/analyzer.hpp"
#include "kgrade/service/config.hpp"
#include "kgrade/train/trainer.hpp"

namespace kgrade::service {

/// Scans data_root/<class>/ and writes a split manifest.
data::DatasetManifest run_split(const std::filesystem::path& data_root, Stage stage,
                                std::uint64_t seed, const std::filesystem::path& out_csv,
                                std::ostream& log);

struct TrainOutputs {
  std::filesystem::path checkpoint;
  std::filesystem::path history;
  train::TrainResult result;
};

/// Trains a freshly initialized model (init seed = config.train.seed) on the
/// manifest's train split, selects on val, and writes
/// out_dir/stage<N>.ckpt and out_dir/stage<N>_history.csv.
TrainOutputs run_train(Stage stage, const AppConfig& config, const data::DatasetManifest& manifest,
                       const std::filesystem::path& out_dir, std::ostream& log);

using Predictor = std::function<int(const data::ManifestRecord&, const data::RgbImage&)>;

/// Argmax of a stage model on val_transforms, ties to class 0.
Predictor model_predictor(model::StageModel<float> model, Stage stage);

/// Classification report over one split of a manifest.
metrics::ClassificationReport evaluate_manifest(const data::DatasetManifest& manifest,
                                                data::Split split, const Predictor& predict);

/// Reads an image file and analyzes it exactly as the /analyze endpoint
/// does with the same bytes.
ApiResult run_infer(const Analyzer& analyzer, const std::filesystem::path& image,
                    std::size_t limit_bytes);

}  // namespace kgrade::service
