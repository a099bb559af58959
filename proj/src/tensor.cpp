// Copyright 2026 The MSDAN Authors.
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

#include "msdan/tensor.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <unordered_set>

#include "msdan/error.hpp"

namespace msdan::ag {

std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

std::vector<double>& Node::ensure_grad() {
  if (grad.empty()) grad.assign(value.size(), 0.0);
  return grad;
}

Tensor::Tensor(Shape shape, std::vector<double> values, bool requires_grad) {
  if (ag::numel(shape) != values.size()) {
    throw Error(Errc::ShapeMismatch, "shape " + shape_str(shape) + " needs " +
                                         std::to_string(ag::numel(shape)) + " values, got " +
                                         std::to_string(values.size()));
  }
  node_ = std::make_shared<Node>();
  node_->shape = std::move(shape);
  node_->value = std::move(values);
  node_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const auto n = ag::numel(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return Tensor(Shape{1}, {value}, requires_grad);
}

double Tensor::item() const {
  if (numel() != 1) {
    throw Error(Errc::ShapeMismatch, "item() on tensor of shape " + shape_str(shape()));
  }
  return node_->value[0];
}

Tensor Tensor::detach() const { return Tensor(node_->shape, node_->value, false); }

namespace {
thread_local bool g_no_grad = false;
}  // namespace

NoGradGuard::NoGradGuard() : previous_(g_no_grad) { g_no_grad = true; }
NoGradGuard::~NoGradGuard() { g_no_grad = previous_; }
bool NoGradGuard::active() { return g_no_grad; }

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw Error(Errc::NonScalarLoss,
                loss.defined() ? "loss has shape " + shape_str(loss.shape()) : "undefined loss");
  }
  Node* root = loss.node().get();
  if (root->consumed) throw Error(Errc::GraphConsumed, "backward already ran on this graph");

  // Iterative post-order DFS gives a topological order (parents first).
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{root, 0}};
  visited.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->consumed) {
        throw Error(Errc::GraphConsumed, "graph reaches a node released by an earlier backward");
      }
      if (visited.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root->ensure_grad()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward_fn && !node->grad.empty()) node->backward_fn(*node);
  }
  for (Node* node : order) {
    if (node->backward_fn) {
      node->backward_fn = nullptr;
      node->parents.clear();
      node->grad.clear();
      node->grad.shrink_to_fit();
      node->consumed = true;
    }
  }
}

namespace detail {

Tensor make_result(Shape shape, std::vector<double> value,
                   const std::vector<Tensor>& inputs,
                   std::function<void(Node&)> backward_fn) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  const bool needs = !g_no_grad && std::any_of(inputs.begin(), inputs.end(),
                                 [](const Tensor& t) { return t.requires_grad(); });
  if (needs) {
    node->requires_grad = true;
    node->backward_fn = std::move(backward_fn);
    for (const auto& t : inputs) {
      if (t.requires_grad()) node->parents.push_back(t.node());
    }
  }
  return Tensor(std::move(node));
}

double* grad_of(const Tensor& t) {
  if (!t.requires_grad()) return nullptr;
  return t.node()->ensure_grad().data();
}

}  // namespace detail

}  // namespace msdan::ag
