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

// Confusion matrices and one-vs-rest classification reports. Any ratio whose
// denominator is zero is reported as 0.

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace kgrade::metrics {

class MetricsError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Rows are true classes, columns are predicted classes.
struct ConfusionMatrix {
  std::vector<std::string> classes;
  std::vector<std::vector<std::size_t>> counts;

  static ConfusionMatrix from_counts(std::vector<std::string> classes,
                                     std::vector<std::vector<std::size_t>> counts);

  std::size_t num_classes() const { return classes.size(); }
  std::size_t total() const;
  std::size_t support(std::size_t c) const;
  std::size_t predicted(std::size_t c) const;
};

ConfusionMatrix confusion(const std::vector<int>& preds, const std::vector<int>& truth,
                          const std::vector<std::string>& classes);
ConfusionMatrix confusion(const std::vector<std::string>& preds,
                          const std::vector<std::string>& truth,
                          const std::vector<std::string>& classes);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct AverageMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

enum class Average { kMacro, kWeighted };

std::vector<ClassMetrics> class_metrics(const ConfusionMatrix& cm);
double accuracy(const ConfusionMatrix& cm);
AverageMetrics aggregate(const std::vector<ClassMetrics>& per_class, Average mode);

struct ClassificationReport {
  ConfusionMatrix matrix;
  std::vector<ClassMetrics> per_class;
  double accuracy = 0.0;
  AverageMetrics macro;
  AverageMetrics weighted;
  std::size_t n = 0;
};

ClassificationReport report(const ConfusionMatrix& cm);
ClassificationReport report(const std::vector<int>& preds, const std::vector<int>& truth,
                            const std::vector<std::string>& classes);

/// Aligned table with 4 decimals.
std::string render_text(const ClassificationReport& r);
/// Same numbers, rounded to 4 decimals, as JSON.
nlohmann::json to_json(const ClassificationReport& r);

}  // namespace kgrade::metrics
