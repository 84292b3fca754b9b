// SPDX-License-Identifier: Apache-2.0
#include "oleo/corpus/news.hpp"

#include "json.hpp"

#include <fstream>
#include <set>

#include "oleo/corpus/tokenizer.hpp"
#include "oleo/error.hpp"

namespace oleo::corpus {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> cols;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find('\t', start);
    cols.push_back(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return cols;
}

bool looks_like_json(const std::filesystem::path& path, std::istream& in) {
  const auto ext = path.extension().string();
  if (ext == ".jsonl" || ext == ".json") return true;
  const auto pos = in.tellg();
  char c = 0;
  while (in.get(c)) {
    if (c != ' ' && c != '\n' && c != '\r' && c != '\t') break;
  }
  in.clear();
  in.seekg(pos);
  return c == '{';
}

std::optional<std::string> json_field(const nlohmann::json& row, const char* key) {
  auto it = row.find(key);
  if (it == row.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw FormatError(std::string("news json: field '") + key + "' is not a string");
  return it->get<std::string>();
}

std::vector<TokenId> to_ids(const std::vector<std::string>& tokens, const Vocabulary& vocab, std::size_t limit) {
  std::vector<TokenId> ids;
  const auto n = std::min(tokens.size(), limit);
  ids.reserve(n);
  for (std::size_t i = 0; i < n; ++i) ids.push_back(vocab.id_of(tokens[i]));
  return ids;
}

}  // namespace

const std::vector<TokenId>& NewsArticle::field(Field f) const {
  switch (f) {
    case Field::Title: return title_tokens;
    case Field::Category: return category_tokens;
    case Field::Abstract: return abstract_tokens;
  }
  throw Error("unknown field");
}

std::vector<TokenId>& NewsArticle::field(Field f) {
  return const_cast<std::vector<TokenId>&>(static_cast<const NewsArticle&>(*this).field(f));
}

bool NewsArticle::same_content(const NewsArticle& o) const {
  return title_tokens == o.title_tokens && category_tokens == o.category_tokens &&
         abstract_tokens == o.abstract_tokens;
}

std::vector<RawNews> load_raw_news(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open news file " + path.string());
  const bool json = looks_like_json(path, in);
  std::vector<RawNews> out;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    RawNews r;
    r.source_row = row;
    if (json) {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(path.string() + " row " + std::to_string(row) + ": invalid JSON: " + e.what());
      }
      auto id = json_field(j, "id");
      if (!id) throw FormatError(path.string() + " row " + std::to_string(row) + ": missing field 'id'");
      r.news_id = *id;
      r.category = json_field(j, "category");
      r.title = json_field(j, "title");
      r.abstract = json_field(j, "abstract");
    } else {
      auto cols = split_tabs(line);
      r.news_id = cols[0];
      if (r.news_id.empty()) throw FormatError(path.string() + " row " + std::to_string(row) + ": missing field 'news_id'");
      if (cols.size() > 1) r.category = cols[1];
      if (cols.size() > 3) r.title = cols[3];
      if (cols.size() > 4) r.abstract = cols[4];
    }
    out.push_back(std::move(r));
  }
  return out;
}

NewsArticle tokenize_news(const RawNews& raw, const Vocabulary& vocab, const FieldLimits& limits) {
  if (limits.title < 1 || limits.category < 1 || limits.abstract < 1) {
    throw ConfigError("tokenize_news: every field limit must be >= 1");
  }
  auto need = [&](const std::optional<std::string>& f, const char* name) -> const std::string& {
    if (!f) throw FormatError("news " + raw.news_id + ": missing field '" + name + "'");
    return *f;
  };
  NewsArticle a;
  a.news_id = raw.news_id;
  a.title_tokens = to_ids(basic_tokenize(need(raw.title, "title")), vocab, limits.title);
  const auto cat = category_token(need(raw.category, "category"));
  if (!cat.empty()) a.category_tokens = to_ids({cat}, vocab, limits.category);
  a.abstract_tokens = to_ids(basic_tokenize(need(raw.abstract, "abstract")), vocab, limits.abstract);
  return a;
}

NewsCorpus::NewsCorpus(std::vector<NewsArticle> articles) : articles_(std::move(articles)) {
  for (std::size_t i = 0; i < articles_.size(); ++i) index_.emplace(articles_[i].news_id, i);
}

std::size_t NewsCorpus::index_of(const std::string& news_id) const {
  auto it = index_.find(news_id);
  if (it == index_.end()) throw LookupError("unknown news id '" + news_id + "'");
  return it->second;
}

std::vector<std::string> NewsCorpus::duplicate_ids() const {
  std::set<std::string> seen, dups;
  for (const auto& a : articles_) {
    if (!seen.insert(a.news_id).second) dups.insert(a.news_id);
  }
  return {dups.begin(), dups.end()};
}

NewsCorpus load_corpus(const std::filesystem::path& news_file, const Vocabulary& vocab, const FieldLimits& limits) {
  std::vector<NewsArticle> articles;
  for (const auto& raw : load_raw_news(news_file)) articles.push_back(tokenize_news(raw, vocab, limits));
  return NewsCorpus(std::move(articles));
}

}  // namespace oleo::corpus
