/* Copyright 2026 The vitslim Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "vitslim/tensor.hpp"

namespace vitslim {

// Ordered record of differentiable operations executed during a forward pass.
//
// Operations append themselves in execution order, which is a topological
// order by construction. backward() walks the record in reverse; each node
// adds its contribution into the gradient buffers of its inputs, so a tensor
// consumed by k operations ends up with the sum of k contributions.
template <Scalar T>
class Graph {
 public:
  struct Node {
    std::string op;
    std::vector<Tensor<T>> inputs;
    Tensor<T> output;
    std::function<void()> backward;
  };

  // A disabled graph records nothing; used for evaluation.
  explicit Graph(bool enabled = true) : enabled_(enabled) {}

  bool enabled() const noexcept { return enabled_; }

  // True when an op over `inputs` must be recorded.
  bool tracks(std::initializer_list<const Tensor<T>*> inputs) const {
    if (!enabled_) return false;
    for (const Tensor<T>* t : inputs) {
      if (t != nullptr && t->defined() && t->requires_grad()) return true;
    }
    return false;
  }

  void record(std::string op, std::vector<Tensor<T>> inputs, Tensor<T> output,
              std::function<void()> backward);

  std::size_t size() const noexcept { return nodes_.size(); }
  const std::vector<Node>& nodes() const noexcept { return nodes_; }

  // Propagates d(loss)/d(x) into every requires_grad tensor reachable from
  // `loss`. Gradients accumulate into existing buffers; call zero_grad on
  // parameters between steps.
  void backward(Tensor<T> loss);

  void clear() { nodes_.clear(); }

  // Test hook: multiplies the incoming gradient of every `op` node by
  // `factor` before its backward rule runs. Used as a negative control for
  // gradient checking.
  void inject_fault(std::string op, T factor) {
    fault_op_ = std::move(op);
    fault_factor_ = factor;
  }

 private:
  bool enabled_;
  std::vector<Node> nodes_;
  std::optional<std::string> fault_op_;
  T fault_factor_ = T{1};
};

extern template class Graph<float>;
extern template class Graph<double>;

}  // namespace vitslim
