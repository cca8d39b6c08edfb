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

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace kgrade {

/// The three grading decisions. Class index order within each stage is part
/// of the checkpoint and API contract and must not change:
///   1 purity:      0 = impure,      1 = pure
///   2 shape:       0 = flat,        1 = round
///   3 orientation: 0 = embryo_down, 1 = embryo_up
enum class Stage : int { kPurity = 1, kShape = 2, kOrientation = 3 };

inline constexpr int kNumClasses = 2;

/// A model, checkpoint or classifier was used for a stage it is not tagged for.
class StageMismatchError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline Stage stage_from_int(int s) {
  if (s < 1 || s > 3) throw std::invalid_argument("stage must be 1, 2 or 3, got " + std::to_string(s));
  return static_cast<Stage>(s);
}

inline int to_int(Stage s) { return static_cast<int>(s); }

inline std::array<std::string_view, 2> class_names(Stage s) {
  switch (s) {
    case Stage::kPurity:
      return {"impure", "pure"};
    case Stage::kShape:
      return {"flat", "round"};
    case Stage::kOrientation:
      return {"embryo_down", "embryo_up"};
  }
  throw std::invalid_argument("unknown stage");
}

inline std::optional<int> class_index(Stage s, std::string_view name) {
  const auto names = class_names(s);
  for (int i = 0; i < kNumClasses; ++i) {
    if (names[i] == name) return i;
  }
  return std::nullopt;
}

inline std::string_view stage_name(Stage s) {
  switch (s) {
    case Stage::kPurity:
      return "purity";
    case Stage::kShape:
      return "shape";
    case Stage::kOrientation:
      return "orientation";
  }
  return "unknown";
}

}  // namespace kgrade
