// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "oleo/corpus/vocabulary.hpp"

namespace oleo::corpus {

// One parsed news row before tokenization. Absent columns/keys stay nullopt so
// the tokenizer can report which required field is missing.
struct RawNews {
  std::string news_id;
  std::optional<std::string> category;
  std::optional<std::string> title;
  std::optional<std::string> abstract;
  std::size_t source_row = 0;
};

struct FieldLimits {
  std::size_t title = 20;
  std::size_t category = 1;
  std::size_t abstract = 40;

  std::size_t total() const { return title + category + abstract; }
};

enum class Field : std::uint8_t { Title = 0, Category = 1, Abstract = 2 };

struct NewsArticle {
  std::string news_id;
  std::vector<TokenId> title_tokens;
  std::vector<TokenId> category_tokens;
  std::vector<TokenId> abstract_tokens;

  const std::vector<TokenId>& field(Field f) const;
  std::vector<TokenId>& field(Field f);
  bool same_content(const NewsArticle& other) const;
};

// Reads MIND-layout TSV (news_id, category, subcategory, title, abstract, url, entities)
// or JSON lines with keys {id, category, title, abstract}. JSON is chosen when the
// extension is .jsonl/.json or the first non-blank byte is '{'.
std::vector<RawNews> load_raw_news(const std::filesystem::path& path);

NewsArticle tokenize_news(const RawNews& raw, const Vocabulary& vocab, const FieldLimits& limits);

// Tokenized articles in file order plus an id index (first occurrence wins).
class NewsCorpus {
 public:
  NewsCorpus() = default;
  explicit NewsCorpus(std::vector<NewsArticle> articles);

  const std::vector<NewsArticle>& articles() const { return articles_; }
  std::size_t size() const { return articles_.size(); }
  bool contains(const std::string& news_id) const { return index_.count(news_id) != 0; }
  std::size_t index_of(const std::string& news_id) const;
  const NewsArticle& at(const std::string& news_id) const { return articles_[index_of(news_id)]; }
  // Ids that occur more than once, each listed once.
  std::vector<std::string> duplicate_ids() const;

 private:
  std::vector<NewsArticle> articles_;
  std::unordered_map<std::string, std::size_t> index_;
};

NewsCorpus load_corpus(const std::filesystem::path& news_file, const Vocabulary& vocab, const FieldLimits& limits);

}  // namespace oleo::corpus
