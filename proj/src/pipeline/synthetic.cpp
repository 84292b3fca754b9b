// SPDX-License-Identifier: Apache-2.0
#include "oleo/pipeline/synthetic.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "oleo/error.hpp"
#include "oleo/util/rng.hpp"

namespace oleo::pipeline {

namespace {

constexpr const char* kCategoryNames[] = {"sports", "finance", "health",  "travel", "music",
                                          "food",   "autos",   "weather", "movies", "tech"};
constexpr const char* kSyllables[] = {"ka", "lo", "mi", "ne", "ru", "sa", "ti", "vo", "ze", "po",
                                      "da", "fe", "gu", "hi", "jo", "bu", "ce", "wa", "xi", "yo"};

std::size_t between(util::Rng& rng, std::size_t lo, std::size_t hi) { return lo + util::uniform_index(rng, hi - lo + 1); }

std::string pseudo_word(util::Rng& rng, std::set<std::string>& used) {
  while (true) {
    std::string w;
    const auto syl = between(rng, 2, 3);
    for (std::size_t i = 0; i < syl; ++i) w += kSyllables[util::uniform_index(rng, std::size(kSyllables))];
    if (used.insert(w).second) return w;
  }
}

std::string sentence(util::Rng& rng, std::size_t len, const std::vector<std::string>& own,
                     const std::vector<std::string>& shared, double shared_p, bool capitalise, bool full_stop) {
  std::string out;
  for (std::size_t i = 0; i < len; ++i) {
    const bool use_shared = !shared.empty() && util::uniform01(rng) < shared_p;
    const auto& pool = use_shared ? shared : own;
    auto w = pool[util::uniform_index(rng, pool.size())];
    if (capitalise && i == 0) w[0] = static_cast<char>(w[0] - 'a' + 'A');
    if (i) out += ' ';
    out += w;
  }
  if (full_stop) out += '.';
  return out;
}

template <typename T>
std::vector<T> sample(util::Rng& rng, const std::vector<T>& pool, std::size_t k) {
  std::vector<T> copy = pool;
  k = std::min(k, copy.size());
  for (std::size_t i = 0; i < k; ++i) std::swap(copy[i], copy[i + util::uniform_index(rng, copy.size() - i)]);
  copy.resize(k);
  return copy;
}

}  // namespace

SyntheticDataset generate_synthetic(const SyntheticConfig& cfg) {
  if (cfg.category_count < 2 || cfg.category_count > std::size(kCategoryNames)) {
    throw ConfigError("synthetic: category_count must lie in [2, 10]");
  }
  if (cfg.news_count < 4 * cfg.category_count) throw ConfigError("synthetic: too few news for the category count");
  util::Rng rng(cfg.seed);
  std::set<std::string> used;
  std::vector<std::vector<std::string>> pools(cfg.category_count);
  for (auto& pool : pools) {
    for (std::size_t i = 0; i < cfg.words_per_category; ++i) pool.push_back(pseudo_word(rng, used));
  }
  std::vector<std::string> shared;
  for (std::size_t i = 0; i < cfg.shared_words; ++i) shared.push_back(pseudo_word(rng, used));

  SyntheticDataset data;
  // per category: warm and cold news indices
  std::vector<std::vector<std::size_t>> warm(cfg.category_count), cold(cfg.category_count);
  for (std::size_t i = 0; i < cfg.news_count; ++i) {
    const auto c = i % cfg.category_count;
    corpus::RawNews n;
    n.news_id = "N" + std::to_string(i + 1);
    n.category = kCategoryNames[c];
    n.title = sentence(rng, between(rng, cfg.title_min, cfg.title_max), pools[c], shared,
                       cfg.shared_word_probability, true, false);
    n.abstract = sentence(rng, between(rng, cfg.abstract_min, cfg.abstract_max), pools[c], shared,
                          cfg.shared_word_probability, true, true);
    n.source_row = i + 1;
    data.news.push_back(std::move(n));
    data.categories.emplace_back(kCategoryNames[c]);
    // within each category the first (1 - cold_fraction) share stays warm
    const auto rank_in_cat = i / cfg.category_count;
    const auto per_cat = (cfg.news_count + cfg.category_count - 1 - c) / cfg.category_count;
    const bool is_cold = static_cast<double>(rank_in_cat) >= (1.0 - cfg.cold_fraction) * static_cast<double>(per_cat);
    data.cold.push_back(is_cold);
    (is_cold ? cold[c] : warm[c]).push_back(i);
  }
  for (std::size_t c = 0; c < cfg.category_count; ++c) {
    if (warm[c].size() < 2 || cold[c].empty()) throw ConfigError("synthetic: cold_fraction leaves a category empty");
  }

  std::vector<std::size_t> preference(cfg.user_count);
  std::vector<std::vector<std::size_t>> history(cfg.user_count);
  for (std::size_t u = 0; u < cfg.user_count; ++u) {
    preference[u] = util::uniform_index(rng, cfg.category_count);
    history[u] = sample(rng, warm[preference[u]], between(rng, cfg.history_min, cfg.history_max));
  }

  std::size_t impression_counter = 0;
  auto make = [&](bool use_cold, std::size_t count) {
    std::vector<corpus::ImpressionRecord> out;
    const auto& source = use_cold ? cold : warm;
    for (std::size_t k = 0; k < count; ++k) {
      const auto u = util::uniform_index(rng, cfg.user_count);
      const auto pref = preference[u];
      corpus::ImpressionRecord rec;
      rec.impression_id = std::to_string(++impression_counter);
      rec.user_id = "U" + std::to_string(u + 1);
      for (auto i : history[u]) rec.history.push_back(data.news[i].news_id);
      std::vector<std::size_t> other;
      for (std::size_t c = 0; c < cfg.category_count; ++c) {
        if (c == pref) continue;
        other.insert(other.end(), source[c].begin(), source[c].end());
      }
      for (auto i : sample(rng, source[pref], between(rng, cfg.positives_min, cfg.positives_max))) {
        rec.candidates.push_back({data.news[i].news_id, 1});
      }
      for (auto i : sample(rng, other, between(rng, cfg.negatives_min, cfg.negatives_max))) {
        rec.candidates.push_back({data.news[i].news_id, 0});
      }
      std::shuffle(rec.candidates.begin(), rec.candidates.end(), rng);
      rec.source_row = out.size() + 1;
      out.push_back(std::move(rec));
    }
    return out;
  };
  data.train = make(false, cfg.train_impressions);
  data.validation = make(false, cfg.validation_impressions);
  data.test = make(true, cfg.test_impressions);
  return data;
}

SyntheticPaths write_synthetic(const SyntheticDataset& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  SyntheticPaths paths{dir / "news.tsv", dir / "behaviors_train.tsv", dir / "behaviors_val.tsv",
                       dir / "behaviors_test.tsv"};
  std::ofstream out(paths.news, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + paths.news.string());
  for (const auto& n : data.news) {
    out << n.news_id << '\t' << n.category.value_or("") << '\t' << n.category.value_or("") << "_sub" << '\t'
        << n.title.value_or("") << '\t' << n.abstract.value_or("") << '\t' << "https://example.invalid/"
        << n.news_id << '\t' << "[]" << '\n';
  }
  out.close();
  corpus::save_behaviors(paths.behaviors_train, data.train);
  corpus::save_behaviors(paths.behaviors_val, data.validation);
  corpus::save_behaviors(paths.behaviors_test, data.test);
  return paths;
}

}  // namespace oleo::pipeline
