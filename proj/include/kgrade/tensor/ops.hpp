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

// Forward ops with reverse-mode gradients. Every op checks that its output is
// finite and throws NumericError otherwise. Implemented for float and double.

#pragma once

#include <cstddef>
#include <vector>

#include "kgrade/tensor/tape.hpp"
#include "kgrade/tensor/tensor.hpp"

namespace kgrade::tensor {

struct Conv2dParams {
  std::size_t stride_h = 1;
  std::size_t stride_w = 1;
  std::size_t pad_h = 0;
  std::size_t pad_w = 0;
  std::size_t groups = 1;
};

/// floor((in + 2*pad - kernel) / stride) + 1; throws when the result is < 1.
std::size_t conv_output_extent(std::size_t in, std::size_t kernel, std::size_t stride,
                               std::size_t pad);

/// input NCHW, weight O x (C/groups) x KH x KW, optional bias O.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                 const Conv2dParams& params);

/// Affine map over the trailing axis: [.., D_in] x [D_out, D_in] -> [.., D_out].
template <typename T>
Tensor<T> linear(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias);

/// Batched matrix product. a: [B, M, K]; b: [B, K, N], or [B, N, K] when
/// transpose_b is set.
template <typename T>
Tensor<T> bmm(const Tensor<T>& a, const Tensor<T>& b, bool transpose_b = false);

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& input, const Tensor<T>& gamma, const Tensor<T>& beta,
                     T eps = T(1e-5));

/// Max-shifted softmax over the trailing axis.
template <typename T>
Tensor<T> softmax(const Tensor<T>& input);

template <typename T>
Tensor<T> log_softmax(const Tensor<T>& input);

/// tanh approximation.
template <typename T>
Tensor<T> gelu(const Tensor<T>& input);

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor);

/// Sum of all elements as a scalar tensor.
template <typename T>
Tensor<T> sum(const Tensor<T>& a);

/// Mean over one axis; the axis is removed from the result.
template <typename T>
Tensor<T> mean_axis(const Tensor<T>& a, std::size_t axis);

template <typename T>
Tensor<T> reshape(const Tensor<T>& a, Shape shape);

/// out.shape[i] = a.shape[axes[i]].
template <typename T>
Tensor<T> permute(const Tensor<T>& a, const std::vector<std::size_t>& axes);

}  // namespace kgrade::tensor
