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

#include "kgrade/tensor/ops.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <numeric>
#include <sstream>

namespace kgrade::tensor {

std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

std::size_t conv_output_extent(std::size_t in, std::size_t kernel, std::size_t stride,
                               std::size_t pad) {
  if (stride == 0) throw ShapeError("conv stride must be positive");
  if (kernel == 0) throw ShapeError("conv kernel must be positive");
  if (in + 2 * pad < kernel) {
    throw ShapeError("conv output extent < 1 (in=" + std::to_string(in) +
                     ", kernel=" + std::to_string(kernel) + ", pad=" + std::to_string(pad) + ")");
  }
  return (in + 2 * pad - kernel) / stride + 1;
}

namespace {

template <typename T>
using NodePtr = std::shared_ptr<detail::Node<T>>;

template <typename T>
void check_finite(const std::vector<T>& v, const char* op) {
  for (const T x : v) {
    if (!std::isfinite(x)) throw NumericError(std::string(op) + ": non-finite output");
  }
}

template <typename T>
Tensor<T> make_output(Shape shape, std::vector<T> data, const char* op) {
  check_finite(data, op);
  return Tensor<T>(std::move(shape), std::move(data));
}

template <typename T>
bool wants_grad(const NodePtr<T>& n) {
  return n && n->tracked;
}

// Records `out` on the active tape if any input is tracked. The closure is
// built lazily so untracked forward passes save nothing.
template <typename T, typename MakeFn>
void maybe_record(const Tensor<T>& out, std::initializer_list<const Tensor<T>*> inputs,
                  MakeFn&& make_fn) {
  GradTape<T>* tape = GradTape<T>::active();
  if (tape == nullptr) return;
  bool any = false;
  for (const Tensor<T>* in : inputs) any = any || in->tracked();
  if (!any) return;
  tape->push(out.node(), make_fn());
}

template <typename T>
inline T dot(const T* a, const T* b, std::size_t n) {
  T s0 = 0, s1 = 0, s2 = 0, s3 = 0, s4 = 0, s5 = 0, s6 = 0, s7 = 0;
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
    s4 += a[i + 4] * b[i + 4];
    s5 += a[i + 5] * b[i + 5];
    s6 += a[i + 6] * b[i + 6];
    s7 += a[i + 7] * b[i + 7];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return ((s0 + s1) + (s2 + s3)) + ((s4 + s5) + (s6 + s7));
}

template <typename T>
inline void axpy(T alpha, const T* x, T* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void require(bool cond, const std::string& msg) {
  if (!cond) throw ShapeError(msg);
}

// Range of output columns whose input column ox*stride + k - pad is in [0, in).
struct ColRange {
  std::size_t begin, end;
};

ColRange valid_cols(std::size_t out, std::size_t in, std::size_t stride, std::size_t k,
                    std::size_t pad) {
  std::size_t begin = 0;
  if (k < pad) begin = (pad - k + stride - 1) / stride;
  // largest ox with ox*stride + k - pad <= in - 1
  const long long lim = static_cast<long long>(in) - 1 + static_cast<long long>(pad) -
                        static_cast<long long>(k);
  if (lim < 0) return {0, 0};
  std::size_t end = static_cast<std::size_t>(lim) / stride + 1;
  end = std::min(end, out);
  if (begin > end) begin = end;
  return {begin, end};
}

}  // namespace

// ---------------------------------------------------------------------------
// conv2d

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                 const Conv2dParams& p) {
  require(input.dim() == 4, "conv2d: input must be NCHW, got " + to_string(input.shape()));
  require(weight.dim() == 4, "conv2d: weight must be OIHW, got " + to_string(weight.shape()));
  require(p.groups >= 1, "conv2d: groups must be >= 1");
  if (p.stride_h == 0 || p.stride_w == 0) throw ShapeError("conv2d: non-positive stride");
  const std::size_t N = input.extent(0), C = input.extent(1), H = input.extent(2),
                    W = input.extent(3);
  const std::size_t O = weight.extent(0), Cg = weight.extent(1), KH = weight.extent(2),
                    KW = weight.extent(3);
  require(C % p.groups == 0, "conv2d: input channels not divisible by groups");
  require(O % p.groups == 0, "conv2d: output channels not divisible by groups");
  require(Cg == C / p.groups, "conv2d: weight input-channel extent " + std::to_string(Cg) +
                                  " != in_channels/groups " + std::to_string(C / p.groups));
  if (bias.defined()) require(bias.dim() == 1 && bias.extent(0) == O, "conv2d: bias extent");
  const std::size_t OH = conv_output_extent(H, KH, p.stride_h, p.pad_h);
  const std::size_t OW = conv_output_extent(W, KW, p.stride_w, p.pad_w);
  const std::size_t opg = O / p.groups;

  const T* in = input.data().data();
  const T* wt = weight.data().data();
  std::vector<T> out(N * O * OH * OW, T(0));

  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t o = 0; o < O; ++o) {
      const std::size_t g = o / opg;
      T* op = out.data() + (n * O + o) * OH * OW;
      if (bias.defined()) std::fill(op, op + OH * OW, bias.data()[o]);
      for (std::size_t c = 0; c < Cg; ++c) {
        const T* ip = in + (n * C + g * Cg + c) * H * W;
        for (std::size_t ky = 0; ky < KH; ++ky) {
          for (std::size_t kx = 0; kx < KW; ++kx) {
            const T w = wt[((o * Cg + c) * KH + ky) * KW + kx];
            const ColRange cols = valid_cols(OW, W, p.stride_w, kx, p.pad_w);
            for (std::size_t oy = 0; oy < OH; ++oy) {
              const long long iy = static_cast<long long>(oy * p.stride_h + ky) -
                                   static_cast<long long>(p.pad_h);
              if (iy < 0 || iy >= static_cast<long long>(H)) continue;
              const T* irow = ip + static_cast<std::size_t>(iy) * W;
              T* orow = op + oy * OW;
              if (cols.begin >= cols.end) continue;
              if (p.stride_w == 1) {
                const T* src = irow + cols.begin + kx - p.pad_w;
                axpy(w, src, orow + cols.begin, cols.end - cols.begin);
              } else {
                for (std::size_t ox = cols.begin; ox < cols.end; ++ox) {
                  orow[ox] += w * irow[ox * p.stride_w + kx - p.pad_w];
                }
              }
            }
          }
        }
      }
    }
  }

  Tensor<T> result = make_output<T>({N, O, OH, OW}, std::move(out), "conv2d");
  maybe_record(result, {&input, &weight, &bias}, [&]() {
    NodePtr<T> in_n = input.node(), w_n = weight.node(), b_n = bias.node();
    return [=](std::span<const T> gout) {
      const bool g_in = wants_grad(in_n), g_w = wants_grad(w_n), g_b = wants_grad(b_n);
      if (g_in) in_n->ensure_grad();
      if (g_w) w_n->ensure_grad();
      if (g_b) b_n->ensure_grad();
      const T* inp = in_n->data.data();
      const T* wtp = w_n->data.data();
      for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t o = 0; o < O; ++o) {
          const std::size_t g = o / opg;
          const T* go = gout.data() + (n * O + o) * OH * OW;
          if (g_b) {
            T s = 0;
            for (std::size_t i = 0; i < OH * OW; ++i) s += go[i];
            b_n->grad[o] += s;
          }
          if (!g_in && !g_w) continue;
          for (std::size_t c = 0; c < Cg; ++c) {
            const std::size_t plane = (n * C + g * Cg + c) * H * W;
            const T* ip = inp + plane;
            for (std::size_t ky = 0; ky < KH; ++ky) {
              for (std::size_t kx = 0; kx < KW; ++kx) {
                const std::size_t widx = ((o * Cg + c) * KH + ky) * KW + kx;
                const T w = wtp[widx];
                const ColRange cols = valid_cols(OW, W, p.stride_w, kx, p.pad_w);
                T gw = 0;
                for (std::size_t oy = 0; oy < OH; ++oy) {
                  const long long iy = static_cast<long long>(oy * p.stride_h + ky) -
                                       static_cast<long long>(p.pad_h);
                  if (iy < 0 || iy >= static_cast<long long>(H)) continue;
                  const std::size_t row = static_cast<std::size_t>(iy) * W;
                  const T* gorow = go + oy * OW;
                  for (std::size_t ox = cols.begin; ox < cols.end; ++ox) {
                    const std::size_t ix = ox * p.stride_w + kx - p.pad_w;
                    if (g_in) in_n->grad[plane + row + ix] += w * gorow[ox];
                    gw += ip[row + ix] * gorow[ox];
                  }
                }
                if (g_w) w_n->grad[widx] += gw;
              }
            }
          }
        }
      }
    };
  });
  return result;
}

// ---------------------------------------------------------------------------
// linear

template <typename T>
Tensor<T> linear(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias) {
  require(input.dim() >= 1, "linear: input must have at least one axis");
  require(weight.dim() == 2, "linear: weight must be [D_out, D_in]");
  const std::size_t Din = weight.extent(1), Dout = weight.extent(0);
  require(input.shape().back() == Din, "linear: trailing extent " +
                                           std::to_string(input.shape().back()) +
                                           " != D_in " + std::to_string(Din));
  if (bias.defined()) require(bias.dim() == 1 && bias.extent(0) == Dout, "linear: bias extent");
  const std::size_t M = input.numel() / Din;
  const T* x = input.data().data();
  const T* w = weight.data().data();
  std::vector<T> out(M * Dout);
  for (std::size_t m = 0; m < M; ++m) {
    for (std::size_t o = 0; o < Dout; ++o) {
      out[m * Dout + o] =
          dot(x + m * Din, w + o * Din, Din) + (bias.defined() ? bias.data()[o] : T(0));
    }
  }
  Shape shape = input.shape();
  shape.back() = Dout;
  Tensor<T> result = make_output<T>(std::move(shape), std::move(out), "linear");
  maybe_record(result, {&input, &weight, &bias}, [&]() {
    NodePtr<T> in_n = input.node(), w_n = weight.node(), b_n = bias.node();
    return [=](std::span<const T> gout) {
      const bool g_in = wants_grad(in_n), g_w = wants_grad(w_n), g_b = wants_grad(b_n);
      if (g_in) in_n->ensure_grad();
      if (g_w) w_n->ensure_grad();
      if (g_b) b_n->ensure_grad();
      for (std::size_t m = 0; m < M; ++m) {
        const T* gy = gout.data() + m * Dout;
        for (std::size_t o = 0; o < Dout; ++o) {
          const T g = gy[o];
          if (g_in) axpy(g, w_n->data.data() + o * Din, in_n->grad.data() + m * Din, Din);
          if (g_w) axpy(g, in_n->data.data() + m * Din, w_n->grad.data() + o * Din, Din);
          if (g_b) b_n->grad[o] += g;
        }
      }
    };
  });
  return result;
}

// ---------------------------------------------------------------------------
// bmm

template <typename T>
Tensor<T> bmm(const Tensor<T>& a, const Tensor<T>& b, bool transpose_b) {
  require(a.dim() == 3 && b.dim() == 3, "bmm: operands must be rank 3");
  const std::size_t B = a.extent(0), M = a.extent(1), K = a.extent(2);
  require(b.extent(0) == B, "bmm: batch mismatch");
  const std::size_t N = transpose_b ? b.extent(1) : b.extent(2);
  require((transpose_b ? b.extent(2) : b.extent(1)) == K, "bmm: inner extent mismatch");
  const T* ap = a.data().data();
  const T* bp = b.data().data();
  std::vector<T> out(B * M * N, T(0));
  for (std::size_t bi = 0; bi < B; ++bi) {
    const T* A = ap + bi * M * K;
    const T* Bm = bp + bi * K * N;
    T* Cm = out.data() + bi * M * N;
    for (std::size_t m = 0; m < M; ++m) {
      if (transpose_b) {
        for (std::size_t n = 0; n < N; ++n) Cm[m * N + n] = dot(A + m * K, Bm + n * K, K);
      } else {
        for (std::size_t k = 0; k < K; ++k) axpy(A[m * K + k], Bm + k * N, Cm + m * N, N);
      }
    }
  }
  Tensor<T> result = make_output<T>({B, M, N}, std::move(out), "bmm");
  maybe_record(result, {&a, &b}, [&]() {
    NodePtr<T> a_n = a.node(), b_n = b.node();
    return [=](std::span<const T> gout) {
      const bool g_a = wants_grad(a_n), g_b = wants_grad(b_n);
      if (g_a) a_n->ensure_grad();
      if (g_b) b_n->ensure_grad();
      for (std::size_t bi = 0; bi < B; ++bi) {
        const T* A = a_n->data.data() + bi * M * K;
        const T* Bm = b_n->data.data() + bi * K * N;
        const T* G = gout.data() + bi * M * N;
        T* gA = g_a ? a_n->grad.data() + bi * M * K : nullptr;
        T* gB = g_b ? b_n->grad.data() + bi * K * N : nullptr;
        for (std::size_t m = 0; m < M; ++m) {
          if (transpose_b) {
            // C[m,n] = sum_k A[m,k] B[n,k]
            for (std::size_t n = 0; n < N; ++n) {
              const T g = G[m * N + n];
              if (gA) axpy(g, Bm + n * K, gA + m * K, K);
              if (gB) axpy(g, A + m * K, gB + n * K, K);
            }
          } else {
            // C[m,n] = sum_k A[m,k] B[k,n]
            for (std::size_t k = 0; k < K; ++k) {
              if (gA) gA[m * K + k] += dot(G + m * N, Bm + k * N, N);
              if (gB) axpy(A[m * K + k], G + m * N, gB + k * N, N);
            }
          }
        }
      }
    };
  });
  return result;
}

// ---------------------------------------------------------------------------
// layer_norm

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& input, const Tensor<T>& gamma, const Tensor<T>& beta,
                     T eps) {
  require(input.dim() >= 1, "layer_norm: input must have at least one axis");
  const std::size_t D = input.shape().back();
  require(D >= 1, "layer_norm: D must be >= 1");
  require(gamma.dim() == 1 && gamma.extent(0) == D, "layer_norm: gamma extent");
  require(beta.dim() == 1 && beta.extent(0) == D, "layer_norm: beta extent");
  const std::size_t rows = input.numel() / D;
  const T* x = input.data().data();
  const T* g = gamma.data().data();
  const T* bt = beta.data().data();
  std::vector<T> out(input.numel());
  std::vector<T> xhat(input.numel());
  std::vector<T> inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = x + r * D;
    T mean = 0;
    for (std::size_t i = 0; i < D; ++i) mean += xr[i];
    mean /= static_cast<T>(D);
    T var = 0;
    for (std::size_t i = 0; i < D; ++i) var += (xr[i] - mean) * (xr[i] - mean);
    var /= static_cast<T>(D);
    const T is = T(1) / std::sqrt(var + eps);
    if (!std::isfinite(is)) throw NumericError("layer_norm: zero variance with eps = 0");
    inv_std[r] = is;
    for (std::size_t i = 0; i < D; ++i) {
      const T xh = (xr[i] - mean) * is;
      xhat[r * D + i] = xh;
      out[r * D + i] = g[i] * xh + bt[i];
    }
  }
  Tensor<T> result = make_output<T>(input.shape(), std::move(out), "layer_norm");
  maybe_record(result, {&input, &gamma, &beta}, [&]() {
    NodePtr<T> in_n = input.node(), g_n = gamma.node(), b_n = beta.node();
    return [=, xhat = std::move(xhat), inv_std = std::move(inv_std)](std::span<const T> gout) {
      const bool g_in = wants_grad(in_n), g_g = wants_grad(g_n), g_b = wants_grad(b_n);
      if (g_in) in_n->ensure_grad();
      if (g_g) g_n->ensure_grad();
      if (g_b) b_n->ensure_grad();
      const T inv_d = T(1) / static_cast<T>(D);
      for (std::size_t r = 0; r < rows; ++r) {
        const T* gy = gout.data() + r * D;
        const T* xh = xhat.data() + r * D;
        if (g_g || g_b) {
          for (std::size_t i = 0; i < D; ++i) {
            if (g_g) g_n->grad[i] += gy[i] * xh[i];
            if (g_b) b_n->grad[i] += gy[i];
          }
        }
        if (!g_in) continue;
        T mean_g = 0, mean_gx = 0;
        for (std::size_t i = 0; i < D; ++i) {
          const T gh = gy[i] * g_n->data[i];
          mean_g += gh;
          mean_gx += gh * xh[i];
        }
        mean_g *= inv_d;
        mean_gx *= inv_d;
        T* gx = in_n->grad.data() + r * D;
        for (std::size_t i = 0; i < D; ++i) {
          const T gh = gy[i] * g_n->data[i];
          gx[i] += inv_std[r] * (gh - mean_g - xh[i] * mean_gx);
        }
      }
    };
  });
  return result;
}

// ---------------------------------------------------------------------------
// softmax / log_softmax

template <typename T>
Tensor<T> softmax(const Tensor<T>& input) {
  require(input.dim() >= 1, "softmax: input must have at least one axis");
  const std::size_t K = input.shape().back();
  const std::size_t rows = K == 0 ? 0 : input.numel() / K;
  const T* x = input.data().data();
  std::vector<T> out(input.numel());
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = x + r * K;
    T* yr = out.data() + r * K;
    const T mx = *std::max_element(xr, xr + K);
    T s = 0;
    for (std::size_t i = 0; i < K; ++i) {
      yr[i] = std::exp(xr[i] - mx);
      s += yr[i];
    }
    for (std::size_t i = 0; i < K; ++i) yr[i] /= s;
  }
  Tensor<T> result = make_output<T>(input.shape(), std::move(out), "softmax");
  maybe_record(result, {&input}, [&]() {
    NodePtr<T> in_n = input.node();
    std::weak_ptr<detail::Node<T>> out_w = result.node();
    return [=](std::span<const T> gout) {
      in_n->ensure_grad();
      const auto out_n = out_w.lock();
      for (std::size_t r = 0; r < rows; ++r) {
        const T* y = out_n->data.data() + r * K;
        const T* gy = gout.data() + r * K;
        const T s = dot(gy, y, K);
        T* gx = in_n->grad.data() + r * K;
        for (std::size_t i = 0; i < K; ++i) gx[i] += y[i] * (gy[i] - s);
      }
    };
  });
  return result;
}

template <typename T>
Tensor<T> log_softmax(const Tensor<T>& input) {
  require(input.dim() >= 1, "log_softmax: input must have at least one axis");
  const std::size_t K = input.shape().back();
  const std::size_t rows = K == 0 ? 0 : input.numel() / K;
  const T* x = input.data().data();
  std::vector<T> out(input.numel());
  std::vector<T> probs(input.numel());
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = x + r * K;
    const T mx = *std::max_element(xr, xr + K);
    T s = 0;
    for (std::size_t i = 0; i < K; ++i) s += std::exp(xr[i] - mx);
    const T lse = mx + std::log(s);
    for (std::size_t i = 0; i < K; ++i) {
      out[r * K + i] = xr[i] - lse;
      probs[r * K + i] = std::exp(xr[i] - lse);
    }
  }
  Tensor<T> result = make_output<T>(input.shape(), std::move(out), "log_softmax");
  maybe_record(result, {&input}, [&]() {
    NodePtr<T> in_n = input.node();
    return [=, probs = std::move(probs)](std::span<const T> gout) {
      in_n->ensure_grad();
      for (std::size_t r = 0; r < rows; ++r) {
        const T* gy = gout.data() + r * K;
        T s = 0;
        for (std::size_t i = 0; i < K; ++i) s += gy[i];
        T* gx = in_n->grad.data() + r * K;
        for (std::size_t i = 0; i < K; ++i) gx[i] += gy[i] - probs[r * K + i] * s;
      }
    };
  });
  return result;
}

// ---------------------------------------------------------------------------
// gelu

namespace {
template <typename T>
constexpr T kGeluC = T(0.7978845608028654);  // sqrt(2/pi)
template <typename T>
constexpr T kGeluA = T(0.044715);
}  // namespace

template <typename T>
Tensor<T> gelu(const Tensor<T>& input) {
  const T* x = input.data().data();
  std::vector<T> out(input.numel());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const T v = x[i];
    const T t = std::tanh(kGeluC<T> * (v + kGeluA<T> * v * v * v));
    out[i] = T(0.5) * v * (T(1) + t);
  }
  Tensor<T> result = make_output<T>(input.shape(), std::move(out), "gelu");
  maybe_record(result, {&input}, [&]() {
    NodePtr<T> in_n = input.node();
    return [=](std::span<const T> gout) {
      in_n->ensure_grad();
      const T* xs = in_n->data.data();
      for (std::size_t i = 0; i < gout.size(); ++i) {
        const T v = xs[i];
        const T t = std::tanh(kGeluC<T> * (v + kGeluA<T> * v * v * v));
        const T dt = (T(1) - t * t) * kGeluC<T> * (T(1) + T(3) * kGeluA<T> * v * v);
        in_n->grad[i] += gout[i] * (T(0.5) * (T(1) + t) + T(0.5) * v * dt);
      }
    };
  });
  return result;
}

// ---------------------------------------------------------------------------
// elementwise and reductions

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require(a.shape() == b.shape(),
          "add: shape mismatch " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  Tensor<T> result = make_output<T>(a.shape(), std::move(out), "add");
  maybe_record(result, {&a, &b}, [&]() {
    NodePtr<T> a_n = a.node(), b_n = b.node();
    return [=](std::span<const T> gout) {
      for (const auto& n : {a_n, b_n}) {
        if (!wants_grad(n)) continue;
        n->ensure_grad();
        for (std::size_t i = 0; i < gout.size(); ++i) n->grad[i] += gout[i];
      }
    };
  });
  return result;
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  require(a.shape() == b.shape(),
          "mul: shape mismatch " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  Tensor<T> result = make_output<T>(a.shape(), std::move(out), "mul");
  maybe_record(result, {&a, &b}, [&]() {
    NodePtr<T> a_n = a.node(), b_n = b.node();
    return [=](std::span<const T> gout) {
      if (wants_grad(a_n)) {
        a_n->ensure_grad();
        for (std::size_t i = 0; i < gout.size(); ++i) a_n->grad[i] += gout[i] * b_n->data[i];
      }
      if (wants_grad(b_n)) {
        b_n->ensure_grad();
        for (std::size_t i = 0; i < gout.size(); ++i) b_n->grad[i] += gout[i] * a_n->data[i];
      }
    };
  });
  return result;
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * factor;
  Tensor<T> result = make_output<T>(a.shape(), std::move(out), "scale");
  maybe_record(result, {&a}, [&]() {
    NodePtr<T> a_n = a.node();
    return [=](std::span<const T> gout) {
      a_n->ensure_grad();
      for (std::size_t i = 0; i < gout.size(); ++i) a_n->grad[i] += gout[i] * factor;
    };
  });
  return result;
}

template <typename T>
Tensor<T> sum(const Tensor<T>& a) {
  T s = 0;
  for (const T v : a.data()) s += v;
  Tensor<T> result = make_output<T>(Shape{}, {s}, "sum");
  maybe_record(result, {&a}, [&]() {
    NodePtr<T> a_n = a.node();
    return [=](std::span<const T> gout) {
      a_n->ensure_grad();
      for (auto& g : a_n->grad) g += gout[0];
    };
  });
  return result;
}

template <typename T>
Tensor<T> mean_axis(const Tensor<T>& a, std::size_t axis) {
  require(axis < a.dim(), "mean_axis: axis out of range");
  const Shape& s = a.shape();
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
  const std::size_t A = s[axis];
  require(A >= 1, "mean_axis: empty axis");
  std::vector<T> out(outer * inner, T(0));
  const T* x = a.data().data();
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t k = 0; k < A; ++k) {
      axpy(T(1), x + (o * A + k) * inner, out.data() + o * inner, inner);
    }
  }
  const T inv = T(1) / static_cast<T>(A);
  for (auto& v : out) v *= inv;
  Shape shape = s;
  shape.erase(shape.begin() + static_cast<std::ptrdiff_t>(axis));
  Tensor<T> result = make_output<T>(std::move(shape), std::move(out), "mean_axis");
  maybe_record(result, {&a}, [&]() {
    NodePtr<T> a_n = a.node();
    return [=](std::span<const T> gout) {
      a_n->ensure_grad();
      for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t k = 0; k < A; ++k) {
          axpy(inv, gout.data() + o * inner, a_n->grad.data() + (o * A + k) * inner, inner);
        }
      }
    };
  });
  return result;
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& a, Shape shape) {
  require(numel(shape) == a.numel(),
          "reshape: " + to_string(a.shape()) + " -> " + to_string(shape));
  std::vector<T> out(a.data().begin(), a.data().end());
  Tensor<T> result = make_output<T>(std::move(shape), std::move(out), "reshape");
  maybe_record(result, {&a}, [&]() {
    NodePtr<T> a_n = a.node();
    return [=](std::span<const T> gout) {
      a_n->ensure_grad();
      for (std::size_t i = 0; i < gout.size(); ++i) a_n->grad[i] += gout[i];
    };
  });
  return result;
}

template <typename T>
Tensor<T> permute(const Tensor<T>& a, const std::vector<std::size_t>& axes) {
  const std::size_t rank = a.dim();
  require(axes.size() == rank, "permute: axes rank mismatch");
  std::vector<bool> seen(rank, false);
  for (const std::size_t ax : axes) {
    require(ax < rank && !seen[ax], "permute: axes are not a permutation");
    seen[ax] = true;
  }
  const Shape& in_shape = a.shape();
  std::vector<std::size_t> in_strides(rank, 1);
  for (std::size_t i = rank; i-- > 1;) in_strides[i - 1] = in_strides[i] * in_shape[i];
  Shape out_shape(rank);
  std::vector<std::size_t> strides(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    out_shape[i] = in_shape[axes[i]];
    strides[i] = in_strides[axes[i]];
  }
  const std::size_t n = a.numel();
  std::vector<std::size_t> src(n);
  std::vector<std::size_t> idx(rank, 0);
  std::size_t offset = 0;
  for (std::size_t i = 0; i < n; ++i) {
    src[i] = offset;
    for (std::size_t d = rank; d-- > 0;) {
      ++idx[d];
      offset += strides[d];
      if (idx[d] < out_shape[d]) break;
      offset -= strides[d] * out_shape[d];
      idx[d] = 0;
    }
  }
  std::vector<T> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = a.data()[src[i]];
  Tensor<T> result = make_output<T>(std::move(out_shape), std::move(out), "permute");
  maybe_record(result, {&a}, [&]() {
    NodePtr<T> a_n = a.node();
    return [=, src = std::move(src)](std::span<const T> gout) {
      a_n->ensure_grad();
      for (std::size_t i = 0; i < gout.size(); ++i) a_n->grad[src[i]] += gout[i];
    };
  });
  return result;
}

#define KGRADE_INSTANTIATE_OPS(T)                                                         \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,         \
                            const Conv2dParams&);                                         \
  template Tensor<T> linear(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);        \
  template Tensor<T> bmm(const Tensor<T>&, const Tensor<T>&, bool);                       \
  template Tensor<T> layer_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T); \
  template Tensor<T> softmax(const Tensor<T>&);                                           \
  template Tensor<T> log_softmax(const Tensor<T>&);                                       \
  template Tensor<T> gelu(const Tensor<T>&);                                              \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                             \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                             \
  template Tensor<T> scale(const Tensor<T>&, T);                                          \
  template Tensor<T> sum(const Tensor<T>&);                                               \
  template Tensor<T> mean_axis(const Tensor<T>&, std::size_t);                            \
  template Tensor<T> reshape(const Tensor<T>&, Shape);                                    \
  template Tensor<T> permute(const Tensor<T>&, const std::vector<std::size_t>&);

KGRADE_INSTANTIATE_OPS(float)
KGRADE_INSTANTIATE_OPS(double)

#undef KGRADE_INSTANTIATE_OPS

}  // namespace kgrade::tensor
