// SPDX-License-Identifier: Apache-2.0
//
// Parameter checkpoint file, little-endian:
//   "OLEO" | version u32 | param count u32
//   per param: name length u32 | UTF-8 name | rank u32 | dims u64 x rank | payload f64 x numel
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "oleo/compute/parameters.hpp"

namespace oleo::compute {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedArray {
  std::string name;
  Shape shape;
  std::vector<double> values;
};

std::vector<std::uint8_t> encode_checkpoint(const ParameterSet& params);
std::vector<NamedArray> decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::filesystem::path& path, const ParameterSet& params);
// Copies stored values into `params`; names, order-insensitive, and shapes must match exactly.
void load_checkpoint(const std::filesystem::path& path, ParameterSet& params);
void load_arrays_into(const std::vector<NamedArray>& arrays, ParameterSet& params);

}  // namespace oleo::compute
