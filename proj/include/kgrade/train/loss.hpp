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

#include <cstddef>
#include <vector>

#include "kgrade/tensor/tensor.hpp"

namespace kgrade::train {

using tensor::Tensor;

/// (1 - eps) on the true class plus eps / C everywhere.
std::vector<double> smooth_targets(std::size_t class_index, std::size_t num_classes, double eps);

/// Stacked smoothed targets for a batch of labels, [N, C].
template <typename T>
Tensor<T> smooth_target_batch(const std::vector<int>& labels, std::size_t num_classes, double eps);

/// mean over rows of -sum_k t_k * log_softmax(logits)_k. logits and targets
/// are [N, K]; targets must be rows of probabilities.
template <typename T>
Tensor<T> soft_cross_entropy(const Tensor<T>& logits, const Tensor<T>& targets);

}  // namespace kgrade::train
