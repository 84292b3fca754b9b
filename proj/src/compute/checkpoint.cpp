// SPDX-License-Identifier: Apache-2.0
#include "oleo/compute/checkpoint.hpp"

#include <algorithm>
#include <unordered_map>

#include "oleo/error.hpp"
#include "oleo/util/binary_io.hpp"

namespace oleo::compute {

namespace {
constexpr std::string_view kMagic = "OLEO";
}

std::vector<std::uint8_t> encode_checkpoint(const ParameterSet& params) {
  util::ByteWriter w;
  w.put_raw(kMagic);
  w.put_u32(kCheckpointVersion);
  w.put_u32(static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params.items()) {
    w.put_u32(static_cast<std::uint32_t>(p.name.size()));
    w.put_raw(p.name);
    w.put_u32(static_cast<std::uint32_t>(p.tensor.rank()));
    for (auto d : p.tensor.shape()) w.put_u64(d);
    for (double v : p.tensor.data()) w.put_f64(v);
  }
  return w.bytes();
}

std::vector<NamedArray> decode_checkpoint(std::span<const std::uint8_t> bytes) {
  util::ByteReader r(bytes, "checkpoint");
  if (r.get_string(4, "magic") != kMagic) throw FormatError("checkpoint: bad magic (expected \"OLEO\")");
  const auto version = r.get_u32("version");
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  }
  const auto count = r.get_u32("param count");
  std::vector<NamedArray> out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedArray a;
    a.name = r.get_string(r.get_u32("name length"), "name");
    const auto rank = r.get_u32("rank");
    if (rank > 8) throw FormatError("checkpoint: implausible rank " + std::to_string(rank) + " for " + a.name);
    for (std::uint32_t k = 0; k < rank; ++k) a.shape.push_back(r.get_u64("dim"));
    const auto n = numel(a.shape);
    if (n > r.remaining() / 8) throw FormatError("checkpoint: truncated payload for " + a.name);
    a.values.resize(n);
    for (auto& v : a.values) v = r.get_f64("payload");
    out.push_back(std::move(a));
  }
  if (r.remaining() != 0) throw FormatError("checkpoint: trailing bytes after last parameter");
  return out;
}

void save_checkpoint(const std::filesystem::path& path, const ParameterSet& params) {
  util::write_file_bytes(path, encode_checkpoint(params));
}

void load_arrays_into(const std::vector<NamedArray>& arrays, ParameterSet& params) {
  if (arrays.size() != params.size()) {
    throw FormatError("checkpoint: holds " + std::to_string(arrays.size()) + " parameters, model expects " +
                      std::to_string(params.size()));
  }
  std::unordered_map<std::string, const NamedArray*> by_name;
  for (const auto& a : arrays) by_name[a.name] = &a;
  for (auto& p : params.items()) {
    auto it = by_name.find(p.name);
    if (it == by_name.end()) throw FormatError("checkpoint: missing parameter '" + p.name + "'");
    if (it->second->shape != p.tensor.shape()) {
      throw ShapeError("checkpoint: parameter '" + p.name + "' has shape " + shape_str(it->second->shape) +
                       ", model expects " + shape_str(p.tensor.shape()));
    }
    auto dst = p.tensor.mutable_data();
    std::copy(it->second->values.begin(), it->second->values.end(), dst.begin());
  }
}

void load_checkpoint(const std::filesystem::path& path, ParameterSet& params) {
  const auto bytes = util::read_file_bytes(path);
  load_arrays_into(decode_checkpoint(bytes), params);
}

}  // namespace oleo::compute
