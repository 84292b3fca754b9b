// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "oleo/compute/tensor.hpp"
#include "oleo/util/rng.hpp"

namespace oleo::compute {

struct Parameter {
  std::string name;  // dotted path, e.g. "mft.layer0.attn.wq"
  Tensor tensor;     // leaf with requires_grad = true
};

// Ordered, name-unique collection of trainable leaves.
class ParameterSet {
 public:
  Tensor& add(std::string name, Tensor tensor);
  const Tensor& get(std::string_view name) const;
  Tensor& get(std::string_view name);
  bool contains(std::string_view name) const;

  std::vector<Parameter>& items() { return params_; }
  const std::vector<Parameter>& items() const { return params_; }
  std::size_t size() const { return params_.size(); }
  std::size_t scalar_count() const;

  void zero_grad();

  // Flat copy of all values, for last-good checkpoints and determinism checks.
  std::vector<std::vector<double>> snapshot() const;
  void restore(const std::vector<std::vector<double>>& values);

 private:
  std::vector<Parameter> params_;
};

Tensor xavier_uniform(std::size_t fan_in, std::size_t fan_out, util::Rng& rng);
Tensor normal_init(Shape shape, double stddev, util::Rng& rng);
Tensor zeros_param(Shape shape);

}  // namespace oleo::compute
