// SPDX-License-Identifier: Apache-2.0
#include "oleo/compute/parameters.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "oleo/error.hpp"

namespace oleo::compute {

Tensor& ParameterSet::add(std::string name, Tensor tensor) {
  if (contains(name)) throw ConfigError("parameter name '" + name + "' is not unique");
  if (!tensor.requires_grad()) throw GradientStateError("parameter '" + name + "' must require grad");
  params_.push_back({std::move(name), std::move(tensor)});
  return params_.back().tensor;
}

bool ParameterSet::contains(std::string_view name) const {
  return std::any_of(params_.begin(), params_.end(), [&](const Parameter& p) { return p.name == name; });
}

const Tensor& ParameterSet::get(std::string_view name) const {
  for (const auto& p : params_) {
    if (p.name == name) return p.tensor;
  }
  throw LookupError("no parameter named '" + std::string(name) + "'");
}

Tensor& ParameterSet::get(std::string_view name) {
  return const_cast<Tensor&>(static_cast<const ParameterSet&>(*this).get(name));
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.tensor.size();
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

std::vector<std::vector<double>> ParameterSet::snapshot() const {
  std::vector<std::vector<double>> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.emplace_back(p.tensor.data().begin(), p.tensor.data().end());
  return out;
}

void ParameterSet::restore(const std::vector<std::vector<double>>& values) {
  if (values.size() != params_.size()) throw ShapeError("restore: parameter count mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto dst = params_[i].tensor.mutable_data();
    if (dst.size() != values[i].size()) throw ShapeError("restore: size mismatch for '" + params_[i].name + "'");
    std::copy(values[i].begin(), values[i].end(), dst.begin());
  }
}

Tensor xavier_uniform(std::size_t fan_in, std::size_t fan_out, util::Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  std::vector<double> v(fan_in * fan_out);
  for (auto& x : v) x = dist(rng);
  return Tensor::from({fan_in, fan_out}, std::move(v), true);
}

Tensor normal_init(Shape shape, double stddev, util::Rng& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  std::vector<double> v(numel(shape));
  for (auto& x : v) x = dist(rng);
  return Tensor::from(std::move(shape), std::move(v), true);
}

Tensor zeros_param(Shape shape) { return Tensor::zeros(std::move(shape), true); }

}  // namespace oleo::compute
