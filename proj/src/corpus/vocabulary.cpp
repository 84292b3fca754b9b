// SPDX-License-Identifier: Apache-2.0
#include "oleo/corpus/vocabulary.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "oleo/corpus/news.hpp"
#include "oleo/corpus/tokenizer.hpp"
#include "oleo/error.hpp"
#include "oleo/util/binary_io.hpp"

namespace oleo::corpus {

Vocabulary::Vocabulary(const std::vector<std::string>& tokens) {
  id_to_token_.reserve(kSpecialCount + tokens.size());
  for (auto s : kSpecialTokens) id_to_token_.emplace_back(s);
  for (const auto& t : tokens) id_to_token_.push_back(t);
  for (std::size_t i = 0; i < id_to_token_.size(); ++i) {
    const auto& t = id_to_token_[i];
    if (t.empty() || t.find_first_of("\n\r") != std::string::npos) {
      throw FormatError("vocabulary: token at id " + std::to_string(i) + " is empty or contains a line break");
    }
    if (!token_to_id_.emplace(t, static_cast<TokenId>(i)).second) {
      throw FormatError("vocabulary: duplicate token '" + t + "' at id " + std::to_string(i));
    }
  }
}

TokenId Vocabulary::id_of(std::string_view token) const {
  auto it = token_to_id_.find(std::string(token));
  return it == token_to_id_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view token) const { return token_to_id_.count(std::string(token)) != 0; }

std::string Vocabulary::serialize() const {
  std::string out;
  for (const auto& t : id_to_token_) {
    out += t;
    out += '\n';
  }
  return out;
}

Vocabulary Vocabulary::parse(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) throw FormatError("vocabulary: last line is not newline-terminated");
    lines.emplace_back(text.substr(start, end - start));
    start = end + 1;
  }
  if (lines.size() < kSpecialCount) throw FormatError("vocabulary: fewer than 5 lines");
  for (std::size_t i = 0; i < kSpecialCount; ++i) {
    if (lines[i] != kSpecialTokens[i]) {
      throw FormatError("vocabulary: line " + std::to_string(i) + " must be " + std::string(kSpecialTokens[i]));
    }
  }
  return Vocabulary(std::vector<std::string>(lines.begin() + kSpecialCount, lines.end()));
}

void Vocabulary::save(const std::filesystem::path& path) const {
  const auto text = serialize();
  util::write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  const auto bytes = util::read_file_bytes(path);
  return parse(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

util::Digest Vocabulary::digest() const { return util::sha256(serialize()); }

Vocabulary vocabulary_from_counts(const std::map<std::string, std::size_t>& counts, std::size_t min_count) {
  if (min_count < 1) throw ConfigError("build_vocabulary: min_count must be >= 1");
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (const auto& [tok, n] : counts) {
    if (n >= min_count) kept.emplace_back(tok, n);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::vector<std::string> tokens;
  tokens.reserve(kept.size());
  for (auto& [tok, n] : kept) tokens.push_back(std::move(tok));
  return Vocabulary(tokens);
}

Vocabulary build_vocabulary(const std::filesystem::path& news_file, std::size_t min_count) {
  if (min_count < 1) throw ConfigError("build_vocabulary: min_count must be >= 1");
  const auto rows = load_raw_news(news_file);
  if (rows.empty()) throw FormatError("build_vocabulary: " + news_file.string() + " contains no news rows");
  std::map<std::string, std::size_t> counts;
  auto need = [&](const RawNews& r, const std::optional<std::string>& f, const char* name) -> const std::string& {
    if (!f) {
      throw FormatError(news_file.string() + " row " + std::to_string(r.source_row) + " (" + r.news_id +
                        "): missing field '" + name + "'");
    }
    return *f;
  };
  for (const auto& r : rows) {
    for (auto& t : basic_tokenize(need(r, r.title, "title"))) ++counts[t];
    for (auto& t : basic_tokenize(need(r, r.abstract, "abstract"))) ++counts[t];
    auto cat = category_token(need(r, r.category, "category"));
    if (!cat.empty()) ++counts[cat];
  }
  if (counts.empty()) throw FormatError("build_vocabulary: corpus has no tokens");
  return vocabulary_from_counts(counts, min_count);
}

}  // namespace oleo::corpus
