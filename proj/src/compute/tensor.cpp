// SPDX-License-Identifier: Apache-2.0
#include "oleo/compute/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "oleo/error.hpp"

namespace oleo::compute {

namespace {
thread_local bool g_grad_enabled = true;
}

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

void Node::ensure_grad() {
  if (grad.empty()) grad.assign(value.size(), 0.0);
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const auto n = numel(shape);
  return from(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::from(Shape shape, std::vector<double> data, bool requires_grad) {
  if (numel(shape) != data.size()) {
    throw ShapeError("tensor: shape " + shape_str(shape) + " holds " + std::to_string(numel(shape)) +
                     " values but " + std::to_string(data.size()) + " were given");
  }
  detail::check_finite("tensor", data, "initial value");
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(data);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value) { return from({}, {value}); }

std::span<double> Tensor::mutable_data() {
  if (!node_->is_leaf) throw GradientStateError("mutable_data: only leaf tensors may be modified in place");
  return node_->value;
}

double Tensor::item() const {
  if (node_->value.size() != 1) {
    throw ShapeError("item: tensor of shape " + shape_str(node_->shape) + " is not a scalar");
  }
  return node_->value[0];
}

void Tensor::zero_grad() {
  node_->grad.clear();
  node_->grad_pending = false;
}

Tensor Tensor::detach() const {
  auto node = std::make_shared<Node>();
  node->shape = node_->shape;
  node->value = node_->value;
  return Tensor(std::move(node));
}

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_enabled() { return g_grad_enabled; }

namespace detail {

void check_finite(const char* op, std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) throw NonFiniteError(std::string(op) + ": non-finite " + what);
  }
}

Tensor make_result(const char* op, Shape shape, std::vector<double> value, std::vector<Tensor> inputs,
                   std::function<void(Node&)> backward_fn) {
  check_finite(op, value, "forward value");
  auto node = std::make_shared<Node>();
  node->op = op;
  node->shape = std::move(shape);
  node->value = std::move(value);
  const bool track = g_grad_enabled && std::any_of(inputs.begin(), inputs.end(), [](const Tensor& t) {
                       return t.requires_grad();
                     });
  if (track) {
    node->requires_grad = true;
    node->is_leaf = false;
    node->inputs.reserve(inputs.size());
    for (auto& t : inputs) node->inputs.push_back(t.node_ptr());
    node->backward_fn = std::move(backward_fn);
  }
  return Tensor(std::move(node));
}

}  // namespace detail

void backward(const Tensor& loss) {
  Node* root = loss.node();
  if (root->value.size() != 1) {
    throw ShapeError("backward: loss must be a scalar, got shape " + shape_str(root->shape));
  }
  detail::check_finite("backward", root->value, "loss");
  if (root->consumed) throw GradientStateError("backward: graph already consumed by a previous backward()");
  if (!root->requires_grad) return;

  // Iterative post-order DFS gives a topological order without deep recursion.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{root, 0}};
  visited.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  std::vector<Node*> leaves;
  for (Node* n : order) {
    if (n->is_leaf) {
      if (n->grad_pending) {
        throw GradientStateError("backward: a parameter still holds a gradient from a previous backward(); "
                                 "call zero_grad() first");
      }
      leaves.push_back(n);
    } else if (n->consumed) {
      throw GradientStateError("backward: graph already consumed by a previous backward()");
    }
  }

  root->grad.assign(1, 1.0);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->is_leaf || n->grad.empty()) continue;
    detail::check_finite(n->op, n->grad, "gradient");
    n->backward_fn(*n);
  }

  for (Node* n : leaves) {
    n->ensure_grad();
    detail::check_finite("backward", n->grad, "parameter gradient");
    n->grad_pending = true;
  }
  // Release the graph: intermediate values stay readable, history does not.
  for (Node* n : order) {
    if (n->is_leaf) continue;
    n->grad.clear();
    n->backward_fn = nullptr;
    n->consumed = true;
  }
  for (Node* n : order) {
    if (!n->is_leaf) n->inputs.clear();
  }
}

}  // namespace oleo::compute
