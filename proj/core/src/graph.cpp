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

#include "vitslim/graph.hpp"

namespace vitslim {

template <Scalar T>
void Graph<T>::record(std::string op, std::vector<Tensor<T>> inputs, Tensor<T> output,
                      std::function<void()> backward) {
  output.set_requires_grad(true);
  nodes_.push_back(Node{std::move(op), std::move(inputs), std::move(output), std::move(backward)});
}

template <Scalar T>
void Graph<T>::backward(Tensor<T> loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw ContractError("backward requires a scalar loss, got shape " +
                        (loss.defined() ? shape_string(loss.shape()) : std::string("<undefined>")));
  }
  if (!loss.requires_grad()) {
    throw ContractError("backward: loss is not connected to any tensor requiring grad");
  }
  loss.ensure_grad()[0] += T{1};
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    Node& node = *it;
    if (!node.output.has_grad()) continue;
    if (fault_op_ && node.op == *fault_op_) {
      for (T& g : node.output.grad()) g *= fault_factor_;
    }
    node.backward();
  }
}

template class Graph<float>;
template class Graph<double>;

}  // namespace vitslim
