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

// Stage classifiers with fixed outputs and call counters.

#pragma once

#include <atomic>

#include "kgrade/cascade/cascade.hpp"

namespace kgrade::testing {

class StubClassifier : public cascade::StageClassifier {
 public:
  StubClassifier(Stage stage, std::array<float, 2> logits) : stage_(stage), logits_(logits) {}

  /// Logits that make `cls` win with probability ~0.88.
  static StubClassifier predicting(Stage stage, int cls) {
    return StubClassifier(stage, cls == 0 ? std::array<float, 2>{2.0f, 0.0f}
                                          : std::array<float, 2>{0.0f, 2.0f});
  }

  Stage stage() const override { return stage_; }
  std::array<float, 2> logits(const tensor::Tensor<float>&) const override {
    calls_.fetch_add(1);
    return logits_;
  }
  int calls() const { return calls_.load(); }

 private:
  Stage stage_;
  std::array<float, 2> logits_;
  mutable std::atomic<int> calls_{0};
};

}  // namespace kgrade::testing
