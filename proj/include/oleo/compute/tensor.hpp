// SPDX-License-Identifier: Apache-2.0
//
// Dense f64 tensors with tape-free reverse-mode autodiff. Every op result keeps
// shared ownership of its inputs and a closure that pushes its gradient back,
// so the graph lives exactly as long as the loss tensor that roots it.
#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace oleo::compute {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until a gradient reaches this node
  bool requires_grad = false;
  bool is_leaf = true;
  // Leaf gradients are accumulated once per backward and must be zeroed explicitly.
  bool grad_pending = false;
  bool consumed = false;  // non-leaf whose graph was released by backward()
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward_fn;

  void ensure_grad();
};

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> data, bool requires_grad = false);
  static Tensor scalar(double value);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }
  std::size_t size() const { return node_->value.size(); }

  std::span<const double> data() const { return node_->value; }
  // Only leaves may be mutated in place (optimizer updates, test perturbations).
  std::span<double> mutable_data();
  double item() const;
  double at(std::size_t flat_index) const { return node_->value.at(flat_index); }

  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad() const { return !node_->grad.empty(); }
  std::span<const double> grad() const { return node_->grad; }
  void zero_grad();

  // Copy of the value with no graph history and requires_grad = false.
  Tensor detach() const;

  Node* node() const { return node_.get(); }
  const std::shared_ptr<Node>& node_ptr() const { return node_; }
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<Node> node_;
};

// Accumulates d(loss)/d(leaf) into every reachable leaf with requires_grad.
// Throws GradientStateError if any such leaf still holds an unzeroed gradient,
// or if the graph under `loss` was already consumed by an earlier backward.
void backward(const Tensor& loss);

// While alive on this thread, op results record no graph (inference mode).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

namespace detail {
// Builds an op result; records inputs and the backward closure only when grad
// is enabled and some input requires grad. Checks the forward value is finite.
Tensor make_result(const char* op, Shape shape, std::vector<double> value,
                   std::vector<Tensor> inputs, std::function<void(Node&)> backward_fn);
void check_finite(const char* op, std::span<const double> values, const char* what);
}  // namespace detail

}  // namespace oleo::compute
