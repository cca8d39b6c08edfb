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


#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "kgrade/service/commands.hpp"
#include "kgrade/train/checkpoint.hpp"
#include "stubs.hpp"

using namespace kgrade;
using namespace kgrade::service;
using kgrade::testing::StubClassifier;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / "kgrade_test_commands" / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

data::SyntheticSpec small_spec(std::uint64_t seed) {
  data::SyntheticSpec s;
  s.train_per_class = 6;
  s.val_per_class = 3;
  s.test_per_class = 3;
  s.seed = seed;
  return s;
}

}  // namespace

TEST_CASE("eval with an oracle predictor reports accuracy 1") {
  const auto dir = fresh_dir("oracle");
  const auto m = data::generate_synthetic(dir, Stage::kShape, small_spec(1));
  const auto r = evaluate_manifest(m, data::Split::kTest,
                                   [](const data::ManifestRecord& rec, const data::RgbImage&) { return rec.label; });
  CHECK(r.accuracy == 1.0);
  CHECK(r.n == 6);
  CHECK(r.macro.f1 == 1.0);
  const auto wrong = evaluate_manifest(
      m, data::Split::kVal, [](const data::ManifestRecord& rec, const data::RgbImage&) { return 1 - rec.label; });
  CHECK(wrong.accuracy == 0.0);
  CHECK_THROWS_AS(evaluate_manifest(m, data::Split::kUnassigned,
                                    [](const data::ManifestRecord&, const data::RgbImage&) { return 0; }),
                  data::DatasetError);
}

TEST_CASE("split command writes a stratified manifest") {
  const auto dir = fresh_dir("split");
  const auto gen = data::generate_synthetic(dir / "gen", Stage::kPurity, small_spec(2));
  // Re-lay the images out as <root>/<class>/ for the scanner.
  for (const auto& r : gen.records) {
    const auto cls = std::string(class_names(Stage::kPurity)[r.label]);
    fs::create_directories(dir / "root" / cls);
    fs::copy_file(r.path, dir / "root" / cls / (std::string(data::split_name(r.split)) + "_" +
                                                fs::path(r.path).filename().string()));
  }
  std::ostringstream log;
  const auto m = run_split(dir / "root", Stage::kPurity, 3, dir / "out" / "manifest.csv", log);
  CHECK(m.records.size() == 24);
  // 12 per class: floor(1.8) = 1 to val and to test.
  CHECK(m.split_size(data::Split::kVal) == 2);
  CHECK(m.split_size(data::Split::kTest) == 2);
  CHECK(m.split_size(data::Split::kTrain) == 20);
  CHECK(data::read_manifest_csv(dir / "out" / "manifest.csv").records == m.records);
  CHECK(log.str().find("train: 20") != std::string::npos);
}

TEST_CASE("train --stage 3 --config tiny on the synthetic dataset") {
  const auto dir = fresh_dir("train");
  data::SyntheticSpec spec;
  spec.seed = 3;
  const auto m = data::generate_synthetic(dir / "data", Stage::kOrientation, spec);
  std::ostringstream log;
  const auto out = run_train(Stage::kOrientation, AppConfig::resolve("tiny"), m, dir / "run", log);
  REQUIRE(fs::exists(out.checkpoint));
  REQUIRE(fs::exists(out.history));
  const auto h = train::read_history_csv(out.history);
  CHECK(h.size() == 20);
  CHECK(h == out.result.history);
  const auto ck = train::load_checkpoint(out.checkpoint, Stage::kOrientation);
  CHECK(ck.history == h);
  CHECK(ck.model.trainable_count() == 2 * ck.model.config().final_dim() + 2);

  CHECK_THROWS_AS(run_train(Stage::kPurity, AppConfig::resolve("tiny"), m, dir / "run2", log),
                  StageMismatchError);
}

TEST_CASE("infer prints the cascade result for one image") {
  const auto dir = fresh_dir("infer");
  const auto img = dir / "kernel.png";
  data::write_png(img, data::RgbImage(20, 20, 0.4f));

  StageModels models;
  auto s1 = std::make_shared<StubClassifier>(Stage::kPurity, std::array<float, 2>{2.0f, 0.0f});
  auto s2 = std::make_shared<StubClassifier>(Stage::kShape, std::array<float, 2>{0.0f, 2.0f});
  auto s3 = std::make_shared<StubClassifier>(Stage::kOrientation, std::array<float, 2>{0.0f, 2.0f});
  models.classifiers = {s1, s2, s3};
  models.versions = {"a", "b", "c"};
  models.preprocess = cascade::val_preprocess(16);
  const Analyzer an(models);
  const auto r = run_infer(an, img, 1 << 20);
  CHECK(r.status == 200);
  CHECK(r.body["summary"] == "(impure, –, –)");
  CHECK(s2->calls() == 0);
  CHECK(s3->calls() == 0);

  CHECK(run_infer(an, dir / "missing.png", 1 << 20).status == 400);
  std::ofstream(dir / "note.txt") << "not an image";
  CHECK(run_infer(an, dir / "note.txt", 1 << 20).body["error"]["code"] == "invalid_image");
}

TEST_CASE("model predictor agrees with the trainer's evaluation") {
  const auto dir = fresh_dir("predictor");
  const auto m = data::generate_synthetic(dir, Stage::kPurity, small_spec(5));
  auto model = model::StageModel<float>::initialized(model::BackboneConfig::tiny(), 5, Stage::kPurity);
  const auto via_files = evaluate_manifest(m, data::Split::kTest, model_predictor(model, Stage::kPurity));
  const auto set = data::load_split(m, data::Split::kTest, 64);
  const auto via_set = train::evaluate(model, set, Stage::kPurity);
  CHECK(via_files.matrix.counts == via_set.report.matrix.counts);
}
