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

#ifndef JRC_NN_TENSOR_H_
#define JRC_NN_TENSOR_H_

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "util/error.h"

namespace jrc::nn {

// All tensors are logically 4-D (batch, channels, height, width); lower-rank
// data uses trailing dimensions of 1. A scalar is {1,1,1,1}.
struct Shape {
  std::array<int, 4> d{1, 1, 1, 1};

  Shape() = default;
  Shape(int b, int c, int h, int w) : d{b, c, h, w} {}

  int64_t numel() const {
    return int64_t(d[0]) * d[1] * d[2] * d[3];
  }
  bool operator==(const Shape& o) const { return d == o.d; }
  bool operator!=(const Shape& o) const { return d != o.d; }
};

// One vertex of the backward graph. Inputs are held by shared_ptr, so a
// retained loss tensor keeps exactly its own ancestry alive; the graph is a
// DAG and closures never capture an owning pointer to their own node.
struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // allocated lazily, same size as value
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void()> backward_fn;  // accumulates this->grad into inputs

  void EnsureGrad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  }
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> n) : node(std::move(n)) {}

  static Tensor Zeros(const Shape& s, bool requires_grad = false);
  static Tensor Constant(const Shape& s, double v);
  static Tensor FromVector(const Shape& s, std::vector<double> data,
                           bool requires_grad = false);

  bool defined() const { return node != nullptr; }
  const Shape& shape() const { return node->shape; }
  int dim(int i) const { return node->shape.d[i]; }
  int64_t numel() const { return node->shape.numel(); }

  std::vector<double>& data() { return node->value; }
  const std::vector<double>& data() const { return node->value; }
  double scalar() const;

  const std::vector<double>& grad() const { return node->grad; }
  bool requires_grad() const { return node->requires_grad; }
  void set_requires_grad(bool rg) { node->requires_grad = rg; }
  void ZeroGrad();

  std::shared_ptr<Node> node;
};

// Reverse-mode sweep from a scalar loss. Seeds d(loss)/d(loss) = 1 and runs
// every backward_fn in reverse topological order.
void Backward(const Tensor& loss);

}  // namespace jrc::nn

#endif  // JRC_NN_TENSOR_H_
