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

#include "kgrade/train/loss.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "kgrade/tensor/ops.hpp"

namespace kgrade::train {

std::vector<double> smooth_targets(std::size_t class_index, std::size_t num_classes, double eps) {
  if (num_classes == 0 || class_index >= num_classes) {
    throw std::out_of_range("class index " + std::to_string(class_index) + " out of range");
  }
  if (!(eps >= 0.0 && eps < 1.0)) throw std::invalid_argument("label smoothing must be in [0, 1)");
  std::vector<double> t(num_classes, eps / static_cast<double>(num_classes));
  t[class_index] += 1.0 - eps;
  return t;
}

template <typename T>
Tensor<T> smooth_target_batch(const std::vector<int>& labels, std::size_t num_classes, double eps) {
  std::vector<T> data;
  data.reserve(labels.size() * num_classes);
  for (int label : labels) {
    if (label < 0) throw std::out_of_range("negative label");
    for (double v : smooth_targets(static_cast<std::size_t>(label), num_classes, eps)) {
      data.push_back(static_cast<T>(v));
    }
  }
  return Tensor<T>({labels.size(), num_classes}, std::move(data));
}

template <typename T>
Tensor<T> soft_cross_entropy(const Tensor<T>& logits, const Tensor<T>& targets) {
  if (logits.dim() != 2 || logits.shape() != targets.shape()) {
    throw ShapeError("soft_cross_entropy: logits " + tensor::to_string(logits.shape()) +
                     " vs targets " + tensor::to_string(targets.shape()));
  }
  const std::size_t K = logits.extent(1);
  const auto t = targets.data();
  for (std::size_t r = 0; r < logits.extent(0); ++r) {
    double s = 0.0;
    for (std::size_t k = 0; k < K; ++k) s += t[r * K + k];
    if (std::abs(s - 1.0) > 1e-4) throw std::invalid_argument("target rows must sum to 1");
  }
  const T inv_n = T(-1) / static_cast<T>(logits.extent(0));
  return tensor::scale(tensor::sum(tensor::mul(tensor::log_softmax(logits), targets)), inv_n);
}

template Tensor<float> smooth_target_batch<float>(const std::vector<int>&, std::size_t, double);
template Tensor<double> smooth_target_batch<double>(const std::vector<int>&, std::size_t, double);
template Tensor<float> soft_cross_entropy(const Tensor<float>&, const Tensor<float>&);
template Tensor<double> soft_cross_entropy(const Tensor<double>&, const Tensor<double>&);

}  // namespace kgrade::train
