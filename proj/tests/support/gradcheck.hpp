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

// Test-only central finite-difference oracle. It perturbs tensor values in
// place and re-evaluates the loss without a tape, so it shares no code path
// with the reverse-mode implementation beyond the forward ops.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "kgrade/tensor/ops.hpp"
#include "kgrade/tensor/tape.hpp"

namespace kgrade::testing {

using tensor::GradTape;
using tensor::Shape;
using tensor::Tensor;

inline constexpr double kFdStep = 1e-5;
// Gradients smaller than this are compared in absolute terms.
inline constexpr double kRelFloor = 1e-4;

inline Tensor<double> random_tensor(Shape shape, std::mt19937_64& rng, double scale = 1.0,
                                    bool requires_grad = true) {
  std::normal_distribution<double> d(0.0, scale);
  std::vector<double> v(tensor::numel(shape));
  for (auto& x : v) x = d(rng);
  return Tensor<double>(std::move(shape), std::move(v), requires_grad);
}

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
};

/// loss_fn builds a scalar from the inputs using ops only. Returns the worst
/// relative error between tape gradients and central differences.
inline GradCheckResult grad_check(const std::function<Tensor<double>()>& loss_fn,
                                  std::vector<Tensor<double>> inputs) {
  for (auto& t : inputs) t.clear_grad();
  {
    GradTape<double> tape;
    auto rec = tape.record();
    Tensor<double> loss = loss_fn();
    tape.backward(loss);
  }
  GradCheckResult res;
  for (auto& t : inputs) {
    std::vector<double> analytic(t.numel(), 0.0);
    if (t.has_grad()) std::copy(t.grad().begin(), t.grad().end(), analytic.begin());
    auto data = t.mutable_data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double orig = data[i];
      data[i] = orig + kFdStep;
      const double plus = loss_fn().item();
      data[i] = orig - kFdStep;
      const double minus = loss_fn().item();
      data[i] = orig;
      const double numeric = (plus - minus) / (2 * kFdStep);
      const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), kRelFloor});
      res.max_rel_error = std::max(res.max_rel_error, std::abs(analytic[i] - numeric) / denom);
      ++res.checked;
    }
  }
  return res;
}

/// sum(out * weights) with fixed random weights, so every output element
/// contributes a distinct gradient.
inline Tensor<double> weighted_sum(const Tensor<double>& out, std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  Tensor<double> w = random_tensor(out.shape(), rng, 1.0, false);
  return tensor::sum(tensor::mul(out, w));
}

}  // namespace kgrade::testing
