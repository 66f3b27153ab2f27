// Copyright 2026 The mixsep Authors
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

#ifndef MIXSEP_TENSOR_H_
#define MIXSEP_TENSOR_H_

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <unordered_set>
#include <vector>

#include "mixsep/common.h"

namespace mixsep {

// Dense tensor node participating in reverse-mode differentiation. Values
// are contiguous row-major. A node produced by an operation keeps shared
// ownership of its inputs and a backward rule that scatters the node's grad
// into theirs; leaves have neither. The graph formed this way is acyclic by
// construction (an op's inputs always predate it).
template <typename Real>
struct TensorNode {
  std::vector<int> shape;
  std::vector<Real> values;
  std::vector<Real> grad;  // empty until first accumulation
  bool requires_grad = false;
  bool backward_ran = false;
  std::vector<std::shared_ptr<TensorNode>> inputs;
  std::function<void(TensorNode&)> backward;

  int64_t size() const { return static_cast<int64_t>(values.size()); }
  void EnsureGrad() {
    if (grad.empty()) grad.assign(values.size(), Real(0));
  }
};

template <typename Real>
class Tensor {
 public:
  using Node = TensorNode<Real>;

  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Tensor Zeros(std::vector<int> shape, bool requires_grad = false) {
    return Full(std::move(shape), Real(0), requires_grad);
  }

  static Tensor Full(std::vector<int> shape, Real value,
                     bool requires_grad = false) {
    auto node = std::make_shared<Node>();
    node->shape = std::move(shape);
    node->values.assign(NumElements(node->shape), value);
    node->requires_grad = requires_grad;
    return Tensor(std::move(node));
  }

  static Tensor FromData(std::vector<int> shape, std::vector<Real> data,
                         bool requires_grad = false) {
    if (static_cast<int64_t>(data.size()) != NumElements(shape))
      throw ShapeError("tensor data size does not match shape");
    auto node = std::make_shared<Node>();
    node->shape = std::move(shape);
    node->values = std::move(data);
    node->requires_grad = requires_grad;
    return Tensor(std::move(node));
  }

  bool defined() const { return node_ != nullptr; }
  const std::vector<int>& shape() const { return node_->shape; }
  int rank() const { return static_cast<int>(node_->shape.size()); }
  int dim(int i) const { return node_->shape[i]; }
  int64_t size() const { return node_->size(); }

  std::vector<Real>& values() { return node_->values; }
  const std::vector<Real>& values() const { return node_->values; }

  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad() const { return !node_->grad.empty(); }
  std::vector<Real>& grad() {
    node_->EnsureGrad();
    return node_->grad;
  }
  void ZeroGrad() {
    node_->EnsureGrad();
    std::fill(node_->grad.begin(), node_->grad.end(), Real(0));
  }

  // Value of a single-element tensor.
  Real item() const {
    if (size() != 1) throw ContractError("item() requires a scalar tensor");
    return node_->values[0];
  }

  const std::shared_ptr<Node>& node() const { return node_; }

  static int64_t NumElements(const std::vector<int>& shape) {
    int64_t n = 1;
    for (int d : shape) {
      if (d < 0) throw ShapeError("negative dimension");
      n *= d;
    }
    return n;
  }

 private:
  std::shared_ptr<Node> node_;
};

namespace detail {

// Assembles an op node. The result requires grad iff any input does; for
// pure-value subgraphs the inputs and rule are dropped so no tape grows.
template <typename Real>
Tensor<Real> MakeOp(std::vector<int> shape, std::vector<Real> values,
                    const std::vector<Tensor<Real>>& inputs,
                    std::function<void(TensorNode<Real>&)> backward) {
  auto node = std::make_shared<TensorNode<Real>>();
  node->shape = std::move(shape);
  node->values = std::move(values);
  for (const auto& t : inputs)
    node->requires_grad = node->requires_grad || t.requires_grad();
  if (node->requires_grad) {
    node->inputs.reserve(inputs.size());
    for (const auto& t : inputs) node->inputs.push_back(t.node());
    node->backward = std::move(backward);
  }
  return Tensor<Real>(std::move(node));
}

}  // namespace detail

// Accumulates d(loss)/d(t) into the grad of every reachable tensor that
// requires grad. Leaves that do not require grad are left untouched. A
// second call on the same loss node is an error; rebuilding the graph (the
// next forward pass) resets the tape.
template <typename Real>
void Backward(const Tensor<Real>& loss) {
  if (loss.size() != 1)
    throw ContractError("backward requires a scalar loss");
  auto* root = loss.node().get();
  if (root->backward_ran)
    throw DoubleBackwardError("backward already ran on this graph");
  root->backward_ran = true;
  if (!root->requires_grad) return;

  // Iterative post-order DFS; the reverse of `order` visits every node
  // before any of its inputs.
  std::vector<TensorNode<Real>*> order;
  std::unordered_set<TensorNode<Real>*> visited;
  std::vector<std::pair<TensorNode<Real>*, size_t>> stack{{root, 0}};
  visited.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      TensorNode<Real>* in = node->inputs[next++].get();
      if (in->requires_grad && visited.insert(in).second)
        stack.emplace_back(in, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root->EnsureGrad();
  root->grad[0] = Real(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorNode<Real>* node = *it;
    if (node->backward) node->backward(*node);
  }
}

}  // namespace mixsep

#endif  // MIXSEP_TENSOR_H_
