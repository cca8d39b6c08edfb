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

#include <cstdint>
#include <vector>

#include "kgrade/tensor/tensor.hpp"

namespace kgrade::train {

using tensor::Tensor;

struct AdamWHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Moment buffers, one per parameter in the order passed to adamw_step.
struct OptimizerState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::int64_t step = 0;
};

/// One AdamW update with decoupled decay applied first:
///   p <- p * (1 - lr * wd), then p <- p - lr * m_hat / (sqrt(v_hat) + eps).
/// Parameters without a gradient buffer are left untouched. Gradients are
/// read from each tensor's grad buffer.
template <typename T>
void adamw_step(std::vector<Tensor<T>>& params, OptimizerState& state, double lr,
                double weight_decay, const AdamWHyper& hyper = {});

}  // namespace kgrade::train
