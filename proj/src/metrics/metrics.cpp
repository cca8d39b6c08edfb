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

#include "kgrade/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <nlohmann/json.hpp>

namespace kgrade::metrics {

namespace {

double ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

double round4(double v) { return std::round(v * 1e4) / 1e4; }

std::string fmt4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

}  // namespace

ConfusionMatrix ConfusionMatrix::from_counts(std::vector<std::string> classes,
                                             std::vector<std::vector<std::size_t>> counts) {
  if (classes.empty()) throw MetricsError("confusion matrix needs at least one class");
  if (counts.size() != classes.size()) throw MetricsError("confusion matrix row count mismatch");
  for (const auto& row : counts) {
    if (row.size() != classes.size()) throw MetricsError("confusion matrix is not square");
  }
  return {std::move(classes), std::move(counts)};
}

std::size_t ConfusionMatrix::total() const {
  std::size_t n = 0;
  for (const auto& row : counts) {
    for (auto v : row) n += v;
  }
  return n;
}

std::size_t ConfusionMatrix::support(std::size_t c) const {
  std::size_t n = 0;
  for (auto v : counts.at(c)) n += v;
  return n;
}

std::size_t ConfusionMatrix::predicted(std::size_t c) const {
  std::size_t n = 0;
  for (const auto& row : counts) n += row.at(c);
  return n;
}

ConfusionMatrix confusion(const std::vector<int>& preds, const std::vector<int>& truth,
                          const std::vector<std::string>& classes) {
  if (preds.size() != truth.size()) {
    throw MetricsError("length mismatch: " + std::to_string(preds.size()) + " predictions vs " +
                       std::to_string(truth.size()) + " labels");
  }
  const std::size_t C = classes.size();
  ConfusionMatrix cm = ConfusionMatrix::from_counts(
      classes, std::vector<std::vector<std::size_t>>(C, std::vector<std::size_t>(C, 0)));
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const int p = preds[i], t = truth[i];
    if (p < 0 || t < 0 || std::size_t(p) >= C || std::size_t(t) >= C) {
      throw MetricsError("unknown label at index " + std::to_string(i));
    }
    ++cm.counts[t][p];
  }
  return cm;
}

ConfusionMatrix confusion(const std::vector<std::string>& preds,
                          const std::vector<std::string>& truth,
                          const std::vector<std::string>& classes) {
  const auto index = [&](const std::string& name) {
    auto it = std::find(classes.begin(), classes.end(), name);
    if (it == classes.end()) throw MetricsError("unknown label '" + name + "'");
    return static_cast<int>(it - classes.begin());
  };
  if (preds.size() != truth.size()) throw MetricsError("length mismatch");
  std::vector<int> p, t;
  p.reserve(preds.size());
  t.reserve(truth.size());
  for (const auto& s : preds) p.push_back(index(s));
  for (const auto& s : truth) t.push_back(index(s));
  return confusion(p, t, classes);
}

std::vector<ClassMetrics> class_metrics(const ConfusionMatrix& cm) {
  std::vector<ClassMetrics> out(cm.num_classes());
  for (std::size_t c = 0; c < cm.num_classes(); ++c) {
    const double tp = static_cast<double>(cm.counts[c][c]);
    ClassMetrics& m = out[c];
    m.support = cm.support(c);
    m.precision = ratio(tp, static_cast<double>(cm.predicted(c)));
    m.recall = ratio(tp, static_cast<double>(m.support));
    m.f1 = ratio(2.0 * m.precision * m.recall, m.precision + m.recall);
  }
  return out;
}

double accuracy(const ConfusionMatrix& cm) {
  const std::size_t n = cm.total();
  if (n == 0) throw MetricsError("accuracy of an empty confusion matrix");
  std::size_t diag = 0;
  for (std::size_t c = 0; c < cm.num_classes(); ++c) diag += cm.counts[c][c];
  return static_cast<double>(diag) / static_cast<double>(n);
}

AverageMetrics aggregate(const std::vector<ClassMetrics>& per_class, Average mode) {
  if (per_class.empty()) throw MetricsError("aggregate over zero classes");
  std::size_t n = 0;
  for (const auto& m : per_class) n += m.support;
  if (mode == Average::kWeighted && n == 0) throw MetricsError("weighted average with N = 0");
  AverageMetrics a;
  for (const auto& m : per_class) {
    const double w = mode == Average::kMacro
                         ? 1.0 / static_cast<double>(per_class.size())
                         : static_cast<double>(m.support) / static_cast<double>(n);
    a.precision += w * m.precision;
    a.recall += w * m.recall;
    a.f1 += w * m.f1;
  }
  return a;
}

ClassificationReport report(const ConfusionMatrix& cm) {
  ClassificationReport r;
  r.matrix = cm;
  r.n = cm.total();
  r.accuracy = accuracy(cm);
  r.per_class = class_metrics(cm);
  r.macro = aggregate(r.per_class, Average::kMacro);
  r.weighted = aggregate(r.per_class, Average::kWeighted);
  return r;
}

ClassificationReport report(const std::vector<int>& preds, const std::vector<int>& truth,
                            const std::vector<std::string>& classes) {
  return report(confusion(preds, truth, classes));
}

std::string render_text(const ClassificationReport& r) {
  std::size_t w = 12;
  for (const auto& c : r.matrix.classes) w = std::max(w, c.size());
  const auto pad = [](const std::string& s, std::size_t width) {
    return std::string(width > s.size() ? width - s.size() : 0, ' ') + s;
  };
  std::ostringstream os;
  os << pad("", w) << pad("precision", 11) << pad("recall", 11) << pad("f1-score", 11)
     << pad("support", 10) << "\n\n";
  for (std::size_t c = 0; c < r.per_class.size(); ++c) {
    const auto& m = r.per_class[c];
    os << pad(r.matrix.classes[c], w) << pad(fmt4(m.precision), 11) << pad(fmt4(m.recall), 11)
       << pad(fmt4(m.f1), 11) << pad(std::to_string(m.support), 10) << "\n";
  }
  os << "\n"
     << pad("accuracy", w) << pad("", 22) << pad(fmt4(r.accuracy), 11)
     << pad(std::to_string(r.n), 10) << "\n";
  const auto avg_row = [&](const std::string& name, const AverageMetrics& a) {
    os << pad(name, w) << pad(fmt4(a.precision), 11) << pad(fmt4(a.recall), 11)
       << pad(fmt4(a.f1), 11) << pad(std::to_string(r.n), 10) << "\n";
  };
  avg_row("macro avg", r.macro);
  avg_row("weighted avg", r.weighted);

  os << "\nconfusion (rows = true, cols = predicted)\n" << pad("", w);
  for (const auto& c : r.matrix.classes) os << pad(c, w + 1);
  os << "\n";
  for (std::size_t i = 0; i < r.matrix.num_classes(); ++i) {
    os << pad(r.matrix.classes[i], w);
    for (auto v : r.matrix.counts[i]) os << pad(std::to_string(v), w + 1);
    os << "\n";
  }
  return os.str();
}

nlohmann::json to_json(const ClassificationReport& r) {
  using nlohmann::json;
  json classes = json::object();
  for (std::size_t c = 0; c < r.per_class.size(); ++c) {
    const auto& m = r.per_class[c];
    classes[r.matrix.classes[c]] = {{"precision", round4(m.precision)},
                                    {"recall", round4(m.recall)},
                                    {"f1", round4(m.f1)},
                                    {"support", m.support}};
  }
  const auto avg = [](const AverageMetrics& a) {
    return json{{"precision", round4(a.precision)},
                {"recall", round4(a.recall)},
                {"f1", round4(a.f1)}};
  };
  return {{"class_order", r.matrix.classes},
          {"classes", classes},
          {"accuracy", round4(r.accuracy)},
          {"macro_avg", avg(r.macro)},
          {"weighted_avg", avg(r.weighted)},
          {"n", r.n},
          {"confusion", r.matrix.counts}};
}

}  // namespace kgrade::metrics
