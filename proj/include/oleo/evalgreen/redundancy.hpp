// SPDX-License-Identifier: Apache-2.0
//
// How often each news article passes through a news encoder when training on
// raw behavior logs: every occurrence in a history or candidate list counts.
#pragma once

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "oleo/corpus/behaviors.hpp"
#include "oleo/evalgreen/energy.hpp"
#include "oleo/evalgreen/metrics.hpp"

#include "json.hpp"

namespace oleo::evalgreen {

struct RedundancyConfig {
  std::size_t batch_size = 64;  // impressions per batch, in file order
  std::vector<double> thresholds = {1, 2, 5, 10, 20, 50, 100, 200, 500, 1000, 2000, 5000};
};

struct CdfPoint {
  double x = 0.0;  // appearance threshold
  double y = 0.0;  // % of news appearing <= x times
};

struct RedundancyStats {
  std::map<std::string, std::size_t> epoch_counts;  // occurrences per news id in one epoch
  std::size_t total_occurrences = 0;
  double mean = 0.0;                // total occurrences / distinct news
  double per_user_mean = 0.0;       // mean over news of the number of distinct users exposed to it
  double per_batch_mean = 0.0;      // mean over (batch, news present in batch) of occurrences in that batch
  std::size_t per_batch_max = 0;
  std::size_t max_count = 0;
  std::size_t batches = 0;
  std::vector<CdfPoint> cdf;  // configured thresholds, then (max_count, 100)
};

RedundancyStats profile_redundancy(std::span<const corpus::ImpressionRecord> records, const RedundancyConfig& cfg = {});

std::string cdf_csv(const RedundancyStats& stats);

nlohmann::json to_json(const MetricsReport& m);
nlohmann::json to_json(const EnergyReport& e);
nlohmann::json to_json(const RedundancyStats& r);

}  // namespace oleo::evalgreen
