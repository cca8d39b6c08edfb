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

#include "kgrade/train/optimizer.hpp"

#include <cmath>
#include <string>

namespace kgrade::train {

template <typename T>
void adamw_step(std::vector<Tensor<T>>& params, OptimizerState& state, double lr,
                double weight_decay, const AdamWHyper& hyper) {
  if (state.m.empty() && state.v.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.numel(), 0.0);
      state.v.emplace_back(p.numel(), 0.0);
    }
  }
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw ShapeError("optimizer state holds " + std::to_string(state.m.size()) +
                     " buffers for " + std::to_string(params.size()) + " parameters");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (state.m[i].size() != params[i].numel() || state.v[i].size() != params[i].numel()) {
      throw ShapeError("optimizer state buffer " + std::to_string(i) + " does not match its parameter");
    }
    if (params[i].has_grad() && params[i].grad().size() != params[i].numel()) {
      throw ShapeError("gradient " + std::to_string(i) + " does not match its parameter");
    }
  }

  ++state.step;
  const double bc1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(state.step));
  const double decay = 1.0 - lr * weight_decay;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].has_grad()) continue;
    auto p = params[i].mutable_data();
    const auto g = params[i].grad();
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double gj = static_cast<double>(g[j]);
      double pj = static_cast<double>(p[j]) * decay;
      m[j] = hyper.beta1 * m[j] + (1.0 - hyper.beta1) * gj;
      v[j] = hyper.beta2 * v[j] + (1.0 - hyper.beta2) * gj * gj;
      const double m_hat = m[j] / bc1;
      const double v_hat = v[j] / bc2;
      pj -= lr * m_hat / (std::sqrt(v_hat) + hyper.eps);
      p[j] = static_cast<T>(pj);
    }
  }
}

template void adamw_step<float>(std::vector<Tensor<float>>&, OptimizerState&, double, double,
                                const AdamWHyper&);
template void adamw_step<double>(std::vector<Tensor<double>>&, OptimizerState&, double, double,
                                 const AdamWHyper&);

}  // namespace kgrade::train
