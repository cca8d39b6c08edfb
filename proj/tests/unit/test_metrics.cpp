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

#include <algorithm>
#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "kgrade/metrics/metrics.hpp"

using namespace kgrade::metrics;

namespace {

struct Expected {
  double pre[2], rec[2], f1[2];
  double acc;
  double macro[3], weighted[3];
};

// Frozen from an independent implementation (scikit-learn
// classification_report on the expanded label lists).
const Expected kStage1{{0.937050, 0.938202}, {0.940433, 0.934701}, {0.938739, 0.936449},
                       0.937615, {0.937626, 0.937567, 0.937594}, {0.937617, 0.937615, 0.937613}};
const Expected kStage2{{0.936242, 0.946429}, {0.948980, 0.933099}, {0.942568, 0.939716},
                       0.941176, {0.941335, 0.941039, 0.941142}, {0.941247, 0.941176, 0.941167}};
const Expected kStage3{{0.904348, 0.915730}, {0.873950, 0.936782}, {0.888889, 0.926136},
                       0.911263, {0.910039, 0.905366, 0.907513}, {0.911107, 0.911263, 0.911009}};

void check_close(double got, double want) { CHECK(std::abs(got - want) < 1e-6); }

void check_report(const ClassificationReport& r, const Expected& e) {
  for (int c = 0; c < 2; ++c) {
    check_close(r.per_class[c].precision, e.pre[c]);
    check_close(r.per_class[c].recall, e.rec[c]);
    check_close(r.per_class[c].f1, e.f1[c]);
  }
  check_close(r.accuracy, e.acc);
  check_close(r.macro.precision, e.macro[0]);
  check_close(r.macro.recall, e.macro[1]);
  check_close(r.macro.f1, e.macro[2]);
  check_close(r.weighted.precision, e.weighted[0]);
  check_close(r.weighted.recall, e.weighted[1]);
  check_close(r.weighted.f1, e.weighted[2]);
}

// Naive per-sample counting, sharing nothing with the module.
struct Brute {
  std::vector<double> pre, rec, f1;
  std::vector<std::size_t> support;
  double acc = 0, macro_p = 0, macro_r = 0, macro_f = 0, w_p = 0, w_r = 0, w_f = 0;
};

Brute brute_force(const std::vector<int>& p, const std::vector<int>& t, int C) {
  Brute b;
  const double N = static_cast<double>(t.size());
  std::size_t correct = 0;
  for (std::size_t i = 0; i < t.size(); ++i) correct += p[i] == t[i];
  b.acc = correct / N;
  for (int c = 0; c < C; ++c) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (p[i] == c && t[i] == c) ++tp;
      if (p[i] == c && t[i] != c) ++fp;
      if (p[i] != c && t[i] == c) ++fn;
    }
    const double pr = tp + fp ? double(tp) / double(tp + fp) : 0.0;
    const double re = tp + fn ? double(tp) / double(tp + fn) : 0.0;
    const double f = pr + re > 0 ? 2 * pr * re / (pr + re) : 0.0;
    b.pre.push_back(pr);
    b.rec.push_back(re);
    b.f1.push_back(f);
    b.support.push_back(tp + fn);
    b.macro_p += pr / C;
    b.macro_r += re / C;
    b.macro_f += f / C;
    b.w_p += pr * double(tp + fn) / N;
    b.w_r += re * double(tp + fn) / N;
    b.w_f += f * double(tp + fn) / N;
  }
  return b;
}

std::vector<std::string> names(int C) {
  std::vector<std::string> n;
  for (int c = 0; c < C; ++c) n.push_back("c" + std::to_string(c));
  return n;
}

}  // namespace

TEST_CASE("confusion examples") {
  const std::vector<std::string> cls{"a", "b"};
  SUBCASE("perfect predictions give a diagonal matrix") {
    auto cm = confusion(std::vector<int>{0, 1, 1, 0, 1}, std::vector<int>{0, 1, 1, 0, 1}, cls);
    CHECK(cm.counts == std::vector<std::vector<std::size_t>>{{2, 0}, {0, 3}});
    CHECK(cm.total() == 5);
  }
  SUBCASE("all predictions class 0 fill column 0 with the supports") {
    auto cm = confusion(std::vector<int>{0, 0, 0, 0}, std::vector<int>{0, 1, 1, 1}, cls);
    CHECK(cm.counts == std::vector<std::vector<std::size_t>>{{1, 0}, {3, 0}});
    CHECK(cm.support(0) == 1);
    CHECK(cm.support(1) == 3);
  }
  SUBCASE("string labels") {
    auto cm = confusion(std::vector<std::string>{"b", "a"}, std::vector<std::string>{"a", "a"},
                        cls);
    CHECK(cm.counts == std::vector<std::vector<std::size_t>>{{1, 1}, {0, 0}});
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(confusion(std::vector<int>{0}, std::vector<int>{0, 1}, cls), MetricsError);
    CHECK_THROWS_AS(confusion(std::vector<int>{2}, std::vector<int>{0}, cls), MetricsError);
    CHECK_THROWS_AS(confusion(std::vector<int>{-1}, std::vector<int>{0}, cls), MetricsError);
    CHECK_THROWS_AS(confusion(std::vector<std::string>{"z"}, std::vector<std::string>{"a"}, cls),
                    MetricsError);
    CHECK_THROWS_AS(ConfusionMatrix::from_counts(cls, {{1, 2}}), MetricsError);
  }
}

TEST_CASE("class metrics edge cases") {
  SUBCASE("a class never predicted and never present scores zero") {
    auto cm = ConfusionMatrix::from_counts({"a", "b", "c"}, {{3, 1, 0}, {0, 2, 0}, {0, 0, 0}});
    auto m = class_metrics(cm);
    CHECK(m[2].precision == 0.0);
    CHECK(m[2].recall == 0.0);
    CHECK(m[2].f1 == 0.0);
    CHECK(m[2].support == 0);
  }
  SUBCASE("single correct sample") {
    auto r = report(std::vector<int>{1}, std::vector<int>{1}, {"a", "b"});
    CHECK(r.accuracy == 1.0);
    CHECK(r.per_class[1].f1 == 1.0);
    CHECK(r.per_class[0].f1 == 0.0);
    CHECK(r.weighted.f1 == 1.0);
    CHECK(r.weighted.precision == r.per_class[1].precision);
  }
  SUBCASE("empty matrix has no accuracy") {
    auto cm = ConfusionMatrix::from_counts({"a", "b"}, {{0, 0}, {0, 0}});
    CHECK_THROWS_AS(accuracy(cm), MetricsError);
    CHECK_THROWS_AS(report(cm), MetricsError);
  }
}

TEST_CASE("reconstructed stage matrices against an independent oracle") {
  check_report(report(ConfusionMatrix::from_counts({"pure", "impure"}, {{521, 33}, {35, 501}})),
               kStage1);
  check_report(report(ConfusionMatrix::from_counts({"flat", "round"}, {{279, 15}, {19, 265}})),
               kStage2);
  check_report(
      report(ConfusionMatrix::from_counts({"embryo_down", "embryo_up"}, {{104, 15}, {11, 163}})),
      kStage3);
  auto r = report(ConfusionMatrix::from_counts({"pure", "impure"}, {{521, 33}, {35, 501}}));
  CHECK(r.accuracy == 1022.0 / 1090.0);
  CHECK(r.n == 1090);
}

TEST_CASE("equal supports make macro and weighted identical") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 500)(rng);
    const std::size_t a = std::uniform_int_distribution<std::size_t>(0, n)(rng);
    const std::size_t b = std::uniform_int_distribution<std::size_t>(0, n)(rng);
    auto r = report(ConfusionMatrix::from_counts({"x", "y"}, {{a, n - a}, {b, n - b}}));
    CHECK(r.macro.precision == doctest::Approx(r.weighted.precision).epsilon(1e-12));
    CHECK(r.macro.recall == doctest::Approx(r.weighted.recall).epsilon(1e-12));
    CHECK(r.macro.f1 == doctest::Approx(r.weighted.f1).epsilon(1e-12));
  }
}

TEST_CASE("accuracy equals weighted recall") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 300; ++trial) {
    const int C = std::uniform_int_distribution<int>(2, 5)(rng);
    std::vector<std::vector<std::size_t>> counts(C, std::vector<std::size_t>(C));
    for (auto& row : counts) {
      for (auto& v : row) v = std::uniform_int_distribution<std::size_t>(0, 50)(rng);
    }
    counts[0][0] += 1;
    auto r = report(ConfusionMatrix::from_counts(names(C), counts));
    CHECK(std::abs(r.accuracy - r.weighted.recall) < 1e-12);
  }
}

TEST_CASE("metrics are invariant under a consistent class permutation") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const int C = std::uniform_int_distribution<int>(2, 4)(rng);
    const std::size_t N = std::uniform_int_distribution<std::size_t>(1, 300)(rng);
    std::vector<int> p(N), t(N);
    for (std::size_t i = 0; i < N; ++i) {
      p[i] = std::uniform_int_distribution<int>(0, C - 1)(rng);
      t[i] = std::uniform_int_distribution<int>(0, C - 1)(rng);
    }
    std::vector<int> perm(C);
    for (int c = 0; c < C; ++c) perm[c] = c;
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<int> pp(N), tp(N);
    for (std::size_t i = 0; i < N; ++i) {
      pp[i] = perm[p[i]];
      tp[i] = perm[t[i]];
    }
    auto a = report(p, t, names(C));
    auto b = report(pp, tp, names(C));
    CHECK(a.accuracy == b.accuracy);
    for (int c = 0; c < C; ++c) {
      CHECK(a.per_class[c].precision == b.per_class[perm[c]].precision);
      CHECK(a.per_class[c].recall == b.per_class[perm[c]].recall);
      CHECK(a.per_class[c].f1 == b.per_class[perm[c]].f1);
    }
    CHECK(std::abs(a.macro.f1 - b.macro.f1) < 1e-12);
    CHECK(std::abs(a.weighted.f1 - b.weighted.f1) < 1e-12);
  }
}

TEST_CASE("metrics match a brute-force counter up to N = 10000") {
  std::mt19937_64 rng(6);
  const std::size_t sizes[] = {1, 2, 7, 50, 333, 1000, 4096, 10000};
  for (std::size_t N : sizes) {
    for (int rep = 0; rep < 3; ++rep) {
      const int C = std::uniform_int_distribution<int>(2, 4)(rng);
      std::vector<int> p(N), t(N);
      const double skill = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
      for (std::size_t i = 0; i < N; ++i) {
        t[i] = std::uniform_int_distribution<int>(0, C - 1)(rng);
        p[i] = std::bernoulli_distribution(skill)(rng)
                   ? t[i]
                   : std::uniform_int_distribution<int>(0, C - 1)(rng);
      }
      auto r = report(p, t, names(C));
      auto b = brute_force(p, t, C);
      CHECK(r.n == N);
      CHECK(r.accuracy == b.acc);
      for (int c = 0; c < C; ++c) {
        CHECK(r.per_class[c].support == b.support[c]);
        CHECK(r.per_class[c].precision == b.pre[c]);
        CHECK(r.per_class[c].recall == b.rec[c]);
        CHECK(r.per_class[c].f1 == b.f1[c]);
      }
      CHECK(std::abs(r.macro.precision - b.macro_p) < 1e-12);
      CHECK(std::abs(r.macro.recall - b.macro_r) < 1e-12);
      CHECK(std::abs(r.macro.f1 - b.macro_f) < 1e-12);
      CHECK(std::abs(r.weighted.precision - b.w_p) < 1e-12);
      CHECK(std::abs(r.weighted.recall - b.w_r) < 1e-12);
      CHECK(std::abs(r.weighted.f1 - b.w_f) < 1e-12);
    }
  }
}

TEST_CASE("text and structured reports carry identical numbers") {
  auto r = report(ConfusionMatrix::from_counts({"embryo_down", "embryo_up"}, {{104, 15}, {11, 163}}));
  const std::string text = render_text(r);
  const auto j = to_json(r);
  CHECK(text.find("0.9043") != std::string::npos);
  CHECK(text.find("0.9368") != std::string::npos);
  CHECK(text.find("0.9113") != std::string::npos);
  CHECK(text.find("macro avg") != std::string::npos);
  CHECK(j["classes"]["embryo_down"]["precision"].get<double>() == 0.9043);
  CHECK(j["accuracy"].get<double>() == 0.9113);
  CHECK(j["macro_avg"]["precision"].get<double>() == 0.9100);
  CHECK(j["class_order"][0] == "embryo_down");
  CHECK(j["n"] == 293);
  CHECK(j["confusion"][1][1] == 163);
  char buf[16];
  for (const auto& [name, m] : j["classes"].items()) {
    for (const char* key : {"precision", "recall", "f1"}) {
      std::snprintf(buf, sizeof(buf), "%.4f", m[key].get<double>());
      CHECK(text.find(buf) != std::string::npos);
    }
  }
}
