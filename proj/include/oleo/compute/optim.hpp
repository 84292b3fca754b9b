// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "oleo/compute/parameters.hpp"

namespace oleo::compute {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::uint64_t step = 0;
};

// Adam with bias correction. Parameters that received no gradient this step are
// treated as having a zero gradient. Non-finite gradients raise NonFiniteError
// before any parameter is touched.
class Adam {
 public:
  explicit Adam(AdamConfig config) : config_(config) {}

  void step(ParameterSet& params);

  const AdamConfig& config() const { return config_; }
  void set_lr(double lr) { config_.lr = lr; }
  const AdamState& state() const { return state_; }

 private:
  AdamConfig config_;
  AdamState state_;
};

}  // namespace oleo::compute
