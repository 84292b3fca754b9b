// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "oleo/error.hpp"

namespace oleo::util {

// Little-endian byte buffer builder used by the checkpoint and cache formats.
class ByteWriter {
 public:
  void put_bytes(std::span<const std::uint8_t> bytes) { buf_.insert(buf_.end(), bytes.begin(), bytes.end()); }
  void put_raw(std::string_view text) {
    put_bytes(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  }
  void put_u32(std::uint32_t v) { put_le(v); }
  void put_u64(std::uint64_t v) { put_le(v); }
  void put_f64(double v) { put_le(std::bit_cast<std::uint64_t>(v)); }

  const std::vector<std::uint8_t>& bytes() const { return buf_; }

 private:
  template <typename U>
  void put_le(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> buf_;
};

// Bounds-checked little-endian reader. Every read past the end throws FormatError naming `what`.
class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> bytes, std::string context)
      : bytes_(bytes), context_(std::move(context)) {}

  std::span<const std::uint8_t> get_bytes(std::size_t n, std::string_view what) {
    require(n, what);
    auto out = bytes_.subspan(pos_, n);
    pos_ += n;
    return out;
  }
  std::string get_string(std::size_t n, std::string_view what) {
    auto b = get_bytes(n, what);
    return std::string(reinterpret_cast<const char*>(b.data()), b.size());
  }
  std::uint32_t get_u32(std::string_view what) { return get_le<std::uint32_t>(what); }
  std::uint64_t get_u64(std::string_view what) { return get_le<std::uint64_t>(what); }
  double get_f64(std::string_view what) { return std::bit_cast<double>(get_le<std::uint64_t>(what)); }

  std::size_t remaining() const { return bytes_.size() - pos_; }
  std::size_t position() const { return pos_; }

 private:
  void require(std::size_t n, std::string_view what) const {
    if (remaining() < n) {
      throw FormatError(context_ + ": truncated while reading " + std::string(what) + " at byte " +
                        std::to_string(pos_) + " (need " + std::to_string(n) + ", have " +
                        std::to_string(remaining()) + ")");
    }
  }
  template <typename U>
  U get_le(std::string_view what) {
    auto b = get_bytes(sizeof(U), what);
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(b[i]) << (8 * i);
    return v;
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
  std::string context_;
};

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace oleo::util
