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

#include <cmath>
#include <random>

#include "doctest.h"
#include "kgrade/cascade/cascade.hpp"
#include "kgrade/data/transforms.hpp"
#include "stubs.hpp"

using namespace kgrade;
using namespace kgrade::cascade;
using kgrade::testing::StubClassifier;

namespace {

data::RgbImage gray(std::size_t n = 16) { return data::RgbImage(n, n, 0.5f); }

struct CountingPreprocess {
  int calls = 0;
  Preprocess fn() {
    return [this](const data::RgbImage& img) {
      ++calls;
      return data::val_transforms(img, 16);
    };
  }
};

}  // namespace

TEST_CASE("decide examples") {
  const float even[] = {0.0f, 0.0f};
  auto d = decide(Stage::kPurity, even);
  CHECK(d.probs[0] == 0.5);
  CHECK(d.probs[1] == 0.5);
  CHECK(d.predicted == 0);
  CHECK(d.predicted_name() == "impure");
  CHECK(decide(Stage::kShape, even).predicted_name() == "flat");
  CHECK(decide(Stage::kOrientation, even).predicted_name() == "embryo_down");

  const float two[] = {2.0f, 0.0f};
  d = decide(Stage::kShape, two);
  // 1 / (1 + e^-2) and its complement.
  CHECK(d.probs[0] == doctest::Approx(0.8807970779778823).epsilon(1e-12));
  CHECK(d.probs[1] == doctest::Approx(0.11920292202211755).epsilon(1e-12));
  CHECK(d.confidence() == d.probs[0]);

  const float big[] = {1000.0f, 1001.0f};
  d = decide(Stage::kPurity, big);
  CHECK(d.predicted == 1);
  CHECK(std::isfinite(d.probs[0]));

  const float nan[] = {NAN, 0.0f};
  CHECK_THROWS(decide(Stage::kPurity, nan));
  const float three[] = {0.0f, 1.0f, 2.0f};
  CHECK_THROWS(decide(Stage::kPurity, three));
}

TEST_CASE("probability pairs sum to one and argmax agrees") {
  std::mt19937_64 rng(2);
  std::normal_distribution<float> n(0.0f, 5.0f);
  for (int i = 0; i < 10000; ++i) {
    const float l[] = {n(rng), n(rng)};
    auto d = decide(Stage::kShape, l);
    CHECK(std::abs(d.probs[0] + d.probs[1] - 1.0) < 1e-6);
    CHECK(d.probs[0] >= 0.0);
    CHECK(d.probs[1] <= 1.0);
    CHECK(d.predicted == (l[1] > l[0] ? 1 : 0));
  }
}

TEST_CASE("cascade shapes over every stage outcome") {
  int shapes_seen[4] = {0, 0, 0, 0};
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      for (int c = 0; c < 2; ++c) {
        auto f1 = StubClassifier::predicting(Stage::kPurity, a);
        auto f2 = StubClassifier::predicting(Stage::kShape, b);
        auto f3 = StubClassifier::predicting(Stage::kOrientation, c);
        CountingPreprocess pre;
        auto label = infer_hierarchical(f1, f2, f3, gray(), pre.fn());
        CHECK(pre.calls == 1);
        CHECK(f1.calls() == 1);
        CHECK(label.y1 == a);
        if (a == 0) {  // impure
          CHECK_FALSE(label.y2.has_value());
          CHECK_FALSE(label.y3.has_value());
          CHECK(label.decisions.size() == 1);
          CHECK(f2.calls() == 0);
          CHECK(f3.calls() == 0);
          CHECK(label.summary() == "(impure, –, –)");
          ++shapes_seen[0];
        } else if (b == 1) {  // pure, round
          CHECK(label.y2 == 1);
          CHECK_FALSE(label.y3.has_value());
          CHECK(label.decisions.size() == 2);
          CHECK(f2.calls() == 1);
          CHECK(f3.calls() == 0);
          CHECK(label.summary() == "(pure, round, –)");
          ++shapes_seen[1];
        } else {  // pure, flat, orientation
          CHECK(label.y2 == 0);
          CHECK(label.y3 == c);
          CHECK(label.decisions.size() == 3);
          CHECK(f2.calls() == 1);
          CHECK(f3.calls() == 1);
          CHECK(label.summary() ==
                (c == 1 ? "(pure, flat, embryo_up)" : "(pure, flat, embryo_down)"));
          ++shapes_seen[c == 1 ? 2 : 3];
        }
        for (std::size_t i = 0; i < label.decisions.size(); ++i) {
          CHECK(to_int(label.decisions[i].stage) == int(i) + 1);
        }
      }
    }
  }
  // 4 impure combinations, 2 round, 1 each for the two orientations.
  CHECK(shapes_seen[0] == 4);
  CHECK(shapes_seen[1] == 2);
  CHECK(shapes_seen[2] == 1);
  CHECK(shapes_seen[3] == 1);
}

TEST_CASE("stage tags are checked") {
  auto f = StubClassifier::predicting(Stage::kShape, 0);
  auto x = data::val_transforms(gray(), 16);
  CHECK_THROWS_AS(classify_stage(f, x, Stage::kPurity), StageMismatchError);
  auto f1 = StubClassifier::predicting(Stage::kPurity, 1);
  CHECK_THROWS_AS(infer_hierarchical(f1, f, f, gray(), val_preprocess(16)), StageMismatchError);

  auto m = model::StageModel<float>::initialized(model::BackboneConfig::tiny(), 1, Stage::kShape);
  CHECK_THROWS_AS(ModelClassifier(m, Stage::kPurity), StageMismatchError);
  CHECK_NOTHROW(ModelClassifier(m, Stage::kShape));
  CHECK_THROWS_AS(infer_hierarchical(f1, f, f, data::RgbImage{}, val_preprocess(16)), data::ImageError);
}

TEST_CASE("a frozen random model gives the same decision every time") {
  auto cfg = model::BackboneConfig::tiny();
  auto m = model::StageModel<float>::initialized(cfg, 33, Stage::kPurity);
  for (float& v : m.head_weight.mutable_data()) v *= 50.0f;
  std::mt19937_64 rng(1);
  data::RgbImage img(40, 30);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (float& v : img.pixels) v = u(rng);
  auto x = data::val_transforms(img, cfg.input_resolution);
  auto first = classify_stage(m, x, Stage::kPurity);
  for (int i = 0; i < 5; ++i) {
    auto again = classify_stage(m, x, Stage::kPurity);
    CHECK(again.predicted == first.predicted);
    CHECK(again.probs == first.probs);
  }
  CHECK(std::abs(first.probs[0] + first.probs[1] - 1.0) < 1e-6);
}

TEST_CASE("joint accuracy estimate") {
  CHECK(joint_accuracy_estimate(1, 1, 1) == 1.0);
  CHECK(joint_accuracy_estimate(0.5, 1, 1) == 0.5);
  CHECK(joint_accuracy_estimate(0.9376, 0.9411, 0.9112) ==
        doctest::Approx(0.9376 * 0.9411 * 0.9112).epsilon(1e-15));
  CHECK_THROWS_AS(joint_accuracy_estimate(1.01, 1, 1), std::out_of_range);
  CHECK_THROWS_AS(joint_accuracy_estimate(1, -0.1, 1), std::out_of_range);
  CHECK_THROWS_AS(joint_accuracy_estimate(1, 1, NAN), std::out_of_range);
}
