// Copyright (c) the JRC Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "nn/tensor.h"

#include <unordered_set>

namespace jrc::nn {

Tensor Tensor::Zeros(const Shape& s, bool requires_grad) {
  auto n = std::make_shared<Node>();
  n->shape = s;
  n->value.assign(static_cast<size_t>(s.numel()), 0.0);
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

Tensor Tensor::Constant(const Shape& s, double v) {
  auto n = std::make_shared<Node>();
  n->shape = s;
  n->value.assign(static_cast<size_t>(s.numel()), v);
  return Tensor(std::move(n));
}

Tensor Tensor::FromVector(const Shape& s, std::vector<double> data,
                          bool requires_grad) {
  Check(static_cast<int64_t>(data.size()) == s.numel(),
        ErrorKind::kInvalidArgument, "tensor data length does not match shape");
  auto n = std::make_shared<Node>();
  n->shape = s;
  n->value = std::move(data);
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

double Tensor::scalar() const {
  Check(numel() == 1, ErrorKind::kInvalidArgument, "scalar() on non-scalar");
  return node->value[0];
}

void Tensor::ZeroGrad() {
  if (!node->grad.empty()) std::fill(node->grad.begin(), node->grad.end(), 0.0);
}

void Backward(const Tensor& loss) {
  Check(loss.defined() && loss.numel() == 1, ErrorKind::kInvalidArgument,
        "Backward expects a defined scalar loss");
  Check(loss.requires_grad(), ErrorKind::kInvalidArgument,
        "Backward on a tensor that does not require grad");

  // Iterative post-order DFS over grad-requiring ancestry.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  struct Frame {
    Node* node;
    size_t next_input;
  };
  std::vector<Frame> stack;
  stack.push_back({loss.node.get(), 0});
  visited.insert(loss.node.get());
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next_input < f.node->inputs.size()) {
      Node* in = f.node->inputs[f.next_input++].get();
      if (in->requires_grad && !visited.count(in)) {
        visited.insert(in);
        stack.push_back({in, 0});
      }
    } else {
      order.push_back(f.node);
      stack.pop_back();
    }
  }

  loss.node->EnsureGrad();
  loss.node->grad[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn && !n->grad.empty()) n->backward_fn();
  }
}

}  // namespace jrc::nn
