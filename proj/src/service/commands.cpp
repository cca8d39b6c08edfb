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


#include "kgrade/service/commands.hpp"

#include <fstream>
#include <iterator>
#include <ostream>

#include "kgrade/cascade/cascade.hpp"
#include "kgrade/data/dataset.hpp"
#include "kgrade/data/transforms.hpp"
#include "kgrade/train/checkpoint.hpp"

namespace kgrade::service {

namespace fs = std::filesystem;

data::DatasetManifest run_split(const fs::path& data_root, Stage stage, std::uint64_t seed,
                                const fs::path& out_csv, std::ostream& log) {
  const auto scanned = data::build_manifest(data_root, stage);
  for (const auto& s : scanned.skipped) log << "skipped " << s.path << ": " << s.reason << "\n";
  auto split = data::split_manifest(scanned, data::SplitRatios{}, seed);
  if (out_csv.has_parent_path()) fs::create_directories(out_csv.parent_path());
  data::write_manifest_csv(split, out_csv);
  const auto names = class_names(stage);
  for (auto sp : {data::Split::kTrain, data::Split::kVal, data::Split::kTest}) {
    const auto c = split.class_counts(sp);
    log << data::split_name(sp) << ": " << split.split_size(sp) << " (" << names[0] << " " << c[0]
        << ", " << names[1] << " " << c[1] << ")\n";
  }
  return split;
}

TrainOutputs run_train(Stage stage, const AppConfig& config, const data::DatasetManifest& manifest,
                       const fs::path& out_dir, std::ostream& log) {
  config.validate();
  if (manifest.stage != stage) {
    throw StageMismatchError("manifest is for stage " + std::to_string(to_int(manifest.stage)) +
                             ", training stage " + std::to_string(to_int(stage)));
  }
  const std::size_t R = config.backbone.input_resolution;
  const auto train_set = data::load_split(manifest, data::Split::kTrain, R);
  const auto val_set = data::load_split(manifest, data::Split::kVal, R);
  log << "stage " << to_int(stage) << ": " << train_set.size() << " train, " << val_set.size()
      << " val, resolution " << R << ", " << (config.train.head_only ? "head-only" : "all parameters")
      << "\n";

  auto model = model::StageModel<float>::initialized(config.backbone, config.train.seed, stage);
  auto result = train::train_stage(stage, train_set, val_set, std::move(model), config.train,
                                   [&log](const train::EpochRecord& r) {
                                     char line[160];
                                     std::snprintf(line, sizeof line,
                                                   "epoch %zu lr %.3e loss %.4f val_acc %.4f val_macro_f1 %.4f\n",
                                                   r.epoch, r.lr, r.train_loss, r.val_acc, r.val_macro_f1);
                                     log << line << std::flush;
                                   });
  fs::create_directories(out_dir);
  const std::string stem = "stage" + std::to_string(to_int(stage));
  TrainOutputs out{out_dir / (stem + ".ckpt"), out_dir / (stem + "_history.csv"), std::move(result)};
  train::save_checkpoint(out.result.best, out.result.history, out.checkpoint);
  train::write_history_csv(out.result.history, out.history);
  log << "best epoch " << out.result.best_epoch << "; wrote " << out.checkpoint.string() << " and "
      << out.history.string() << "\n";
  return out;
}

Predictor model_predictor(model::StageModel<float> model, Stage stage) {
  auto classifier = std::make_shared<cascade::ModelClassifier>(std::move(model), stage);
  const std::size_t R = classifier->model().config().input_resolution;
  return [classifier, R, stage](const data::ManifestRecord&, const data::RgbImage& img) {
    return cascade::classify_stage(*classifier, data::val_transforms(img, R), stage).predicted;
  };
}

metrics::ClassificationReport evaluate_manifest(const data::DatasetManifest& manifest,
                                                data::Split split, const Predictor& predict) {
  const auto records = manifest.subset(split);
  if (records.empty()) {
    throw data::DatasetError("manifest has no " + std::string(data::split_name(split)) + " records");
  }
  std::vector<int> preds, truth;
  for (const auto& r : records) {
    preds.push_back(predict(r, data::read_image(r.path)));
    truth.push_back(r.label);
  }
  const auto names = class_names(manifest.stage);
  return metrics::report(preds, truth, {std::string(names[0]), std::string(names[1])});
}

ApiResult run_infer(const Analyzer& analyzer, const fs::path& image, std::size_t limit_bytes) {
  std::ifstream in(image, std::ios::binary);
  if (!in) return api_error(400, "missing_image", "cannot open " + image.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return analyzer.analyze_upload(bytes, limit_bytes);
}

}  // namespace kgrade::service
