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

#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "kgrade/tensor/tensor.hpp"

namespace kgrade::tensor {

/// Ordered record of executed ops for reverse-mode differentiation.
///
/// Ops record themselves onto the tape that is active on the calling thread
/// (see record()) whenever at least one of their inputs is tracked. A tape
/// and the tensors it references belong to a single thread.
template <typename T>
class GradTape {
 public:
  /// Receives the gradient of the op's output and accumulates into inputs.
  using BackwardFn = std::function<void(std::span<const T> grad_out)>;

  /// RAII guard that makes a tape the active one on this thread.
  class Recording {
   public:
    explicit Recording(GradTape* tape) : previous_(active_slot()) { active_slot() = tape; }
    ~Recording() { active_slot() = previous_; }
    Recording(const Recording&) = delete;
    Recording& operator=(const Recording&) = delete;

   private:
    GradTape* previous_;
  };

  GradTape() = default;
  GradTape(const GradTape&) = delete;
  GradTape& operator=(const GradTape&) = delete;
  ~GradTape() {
    for (auto& e : entries_) e.output->producer = nullptr;
  }

  [[nodiscard]] Recording record() { return Recording(this); }

  static GradTape* active() { return active_slot(); }

  std::size_t size() const { return entries_.size(); }

  bool contains(const Tensor<T>& t) const { return t.defined() && t.node()->producer == this; }

  void push(const std::shared_ptr<detail::Node<T>>& output, BackwardFn fn) {
    output->producer = this;
    output->tracked = true;
    entries_.push_back(Entry{output, std::move(fn)});
  }

  /// Seeds d(loss)/d(loss) = 1 and replays the tape in reverse. Gradients
  /// accumulate into every tracked tensor reached, leaves included.
  void backward(const Tensor<T>& loss) {
    if (!loss.defined() || loss.numel() != 1) {
      throw ShapeError("backward() needs a scalar loss");
    }
    if (!contains(loss)) {
      throw std::logic_error("backward(): loss was not produced on this tape");
    }
    loss.node()->ensure_grad();
    loss.node()->grad[0] += T(1);
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
      auto& out = *it->output;
      if (out.grad.empty()) continue;
      it->fn(std::span<const T>(out.grad));
    }
  }

 private:
  struct Entry {
    std::shared_ptr<detail::Node<T>> output;
    BackwardFn fn;
  };

  static GradTape*& active_slot() {
    thread_local GradTape* slot = nullptr;
    return slot;
  }

  std::vector<Entry> entries_;
};

template <typename T>
void backward(const Tensor<T>& loss, GradTape<T>& tape) {
  tape.backward(loss);
}

}  // namespace kgrade::tensor
