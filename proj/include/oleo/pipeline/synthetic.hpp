// SPDX-License-Identifier: Apache-2.0
//
// Seeded synthetic news + behavior logs. Every user prefers one category and
// clicks exactly the candidates of that category, so click behavior is fully
// determined by category match. Test impressions only show "cold" news ids
// that never occur in the training logs.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "oleo/corpus/behaviors.hpp"
#include "oleo/corpus/news.hpp"

namespace oleo::pipeline {

struct SyntheticConfig {
  std::size_t news_count = 200;
  std::size_t category_count = 5;
  std::size_t words_per_category = 24;
  std::size_t shared_words = 16;
  double shared_word_probability = 0.2;
  std::size_t title_min = 5, title_max = 8;
  std::size_t abstract_min = 8, abstract_max = 14;
  double cold_fraction = 0.3;  // news ids held out for test candidates
  std::size_t user_count = 100;
  std::size_t history_min = 3, history_max = 10;
  std::size_t train_impressions = 500;
  std::size_t validation_impressions = 100;
  std::size_t test_impressions = 200;
  std::size_t positives_min = 1, positives_max = 2;
  std::size_t negatives_min = 3, negatives_max = 6;
  std::uint64_t seed = 7;
};

struct SyntheticDataset {
  std::vector<corpus::RawNews> news;
  std::vector<std::string> categories;  // category of news[i]
  std::vector<bool> cold;               // news[i] only appears in test candidates
  std::vector<corpus::ImpressionRecord> train;
  std::vector<corpus::ImpressionRecord> validation;
  std::vector<corpus::ImpressionRecord> test;
};

SyntheticDataset generate_synthetic(const SyntheticConfig& cfg);

struct SyntheticPaths {
  std::filesystem::path news;
  std::filesystem::path behaviors_train;
  std::filesystem::path behaviors_val;
  std::filesystem::path behaviors_test;
};

// Writes news.tsv (MIND layout) and behaviors_{train,val,test}.tsv under `dir`.
SyntheticPaths write_synthetic(const SyntheticDataset& data, const std::filesystem::path& dir);

}  // namespace oleo::pipeline
