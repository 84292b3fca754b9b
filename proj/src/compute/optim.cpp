// SPDX-License-Identifier: Apache-2.0
#include "oleo/compute/optim.hpp"

#include <cmath>

#include "oleo/error.hpp"

namespace oleo::compute {

void Adam::step(ParameterSet& params) {
  auto& items = params.items();
  if (state_.m.empty()) {
    for (const auto& p : items) {
      state_.m.emplace_back(p.tensor.size(), 0.0);
      state_.v.emplace_back(p.tensor.size(), 0.0);
    }
  }
  if (state_.m.size() != items.size()) throw ShapeError("adam: optimizer state does not match parameter set");
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (state_.m[i].size() != items[i].tensor.size()) {
      throw ShapeError("adam: state size mismatch for '" + items[i].name + "'");
    }
    for (double g : items[i].tensor.grad()) {
      if (!std::isfinite(g)) throw NonFiniteError("adam: non-finite gradient for '" + items[i].name + "'");
    }
  }

  ++state_.step;
  const double t = static_cast<double>(state_.step);
  const double bc1 = 1.0 - std::pow(config_.beta1, t);
  const double bc2 = 1.0 - std::pow(config_.beta2, t);
  for (std::size_t i = 0; i < items.size(); ++i) {
    auto& tensor = items[i].tensor;
    auto grad = tensor.grad();
    auto w = tensor.mutable_data();
    auto& m = state_.m[i];
    auto& v = state_.v[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      const double g = grad.empty() ? 0.0 : grad[j];
      m[j] = config_.beta1 * m[j] + (1.0 - config_.beta1) * g;
      v[j] = config_.beta2 * v[j] + (1.0 - config_.beta2) * g * g;
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      w[j] -= config_.lr * mhat / (std::sqrt(vhat) + config_.eps);
    }
  }
}

}  // namespace oleo::compute
