// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "oleo/util/sha256.hpp"

namespace oleo::corpus {

using TokenId = std::uint32_t;

inline constexpr TokenId kPad = 0;
inline constexpr TokenId kUnk = 1;
inline constexpr TokenId kCls = 2;
inline constexpr TokenId kSep = 3;
inline constexpr TokenId kMask = 4;
inline constexpr std::size_t kSpecialCount = 5;

inline constexpr std::string_view kSpecialTokens[kSpecialCount] = {"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"};

class Vocabulary {
 public:
  // Specials at ids 0..4 followed by `tokens` in the given order.
  explicit Vocabulary(const std::vector<std::string>& tokens = {});

  std::size_t size() const { return id_to_token_.size(); }
  TokenId id_of(std::string_view token) const;  // kUnk when absent
  bool contains(std::string_view token) const;
  const std::string& token(TokenId id) const { return id_to_token_.at(id); }
  const std::vector<std::string>& tokens() const { return id_to_token_; }

  // One token per line; line number = id.
  std::string serialize() const;
  static Vocabulary parse(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);
  util::Digest digest() const;  // equals sha256 of the saved file

 private:
  std::unordered_map<std::string, TokenId> token_to_id_;
  std::vector<std::string> id_to_token_;
};

// Orders tokens with count >= min_count by descending count, ties lexicographic.
Vocabulary vocabulary_from_counts(const std::map<std::string, std::size_t>& counts, std::size_t min_count);

// Counts title and abstract tokens plus the atomic category token of every row.
Vocabulary build_vocabulary(const std::filesystem::path& news_file, std::size_t min_count);

}  // namespace oleo::corpus
