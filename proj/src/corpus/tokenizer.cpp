// SPDX-License-Identifier: Apache-2.0
#include "oleo/corpus/tokenizer.hpp"

namespace oleo::corpus {

namespace {

bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

bool is_punct(unsigned char c) {
  return (c >= 33 && c <= 47) || (c >= 58 && c <= 64) || (c >= 91 && c <= 96) || (c >= 123 && c <= 126);
}

char lower(unsigned char c) { return static_cast<char>(c >= 'A' && c <= 'Z' ? c + ('a' - 'A') : c); }

}  // namespace

std::vector<std::string> basic_tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_space(c)) {
      flush();
    } else if (is_punct(c)) {
      flush();
      out.emplace_back(1, ch);
    } else {
      cur.push_back(lower(c));
    }
  }
  flush();
  return out;
}

std::string category_token(std::string_view category) {
  std::size_t b = 0, e = category.size();
  while (b < e && is_space(static_cast<unsigned char>(category[b]))) ++b;
  while (e > b && is_space(static_cast<unsigned char>(category[e - 1]))) --e;
  std::string out;
  out.reserve(e - b);
  for (std::size_t i = b; i < e; ++i) out.push_back(lower(static_cast<unsigned char>(category[i])));
  return out;
}

}  // namespace oleo::corpus
