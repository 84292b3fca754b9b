// SPDX-License-Identifier: Apache-2.0
#include "oleo/evalgreen/redundancy.hpp"

#include <algorithm>
#include <iomanip>
#include <set>
#include <sstream>
#include <unordered_map>

#include "oleo/error.hpp"

namespace oleo::evalgreen {

RedundancyStats profile_redundancy(std::span<const corpus::ImpressionRecord> records, const RedundancyConfig& cfg) {
  if (records.empty()) throw ConfigError("profile: behavior log is empty");
  if (cfg.batch_size == 0) throw ConfigError("profile: batch_size must be positive");
  RedundancyStats st;
  std::map<std::string, std::set<std::string>> users;
  std::size_t batch_pairs = 0, batch_occ = 0;
  for (std::size_t start = 0; start < records.size(); start += cfg.batch_size) {
    std::unordered_map<std::string, std::size_t> in_batch;
    for (std::size_t i = start; i < std::min(records.size(), start + cfg.batch_size); ++i) {
      const auto& r = records[i];
      auto hit = [&](const std::string& id) {
        ++st.epoch_counts[id];
        ++in_batch[id];
        users[id].insert(r.user_id);
        ++st.total_occurrences;
      };
      for (const auto& h : r.history) hit(h);
      for (const auto& c : r.candidates) hit(c.news_id);
    }
    ++st.batches;
    batch_pairs += in_batch.size();
    for (const auto& [id, n] : in_batch) {
      batch_occ += n;
      st.per_batch_max = std::max(st.per_batch_max, n);
    }
  }
  if (st.epoch_counts.empty()) throw ConfigError("profile: behavior log references no news");
  const double distinct = static_cast<double>(st.epoch_counts.size());
  st.mean = static_cast<double>(st.total_occurrences) / distinct;
  std::size_t user_sum = 0;
  for (const auto& [id, u] : users) user_sum += u.size();
  st.per_user_mean = static_cast<double>(user_sum) / distinct;
  st.per_batch_mean = static_cast<double>(batch_occ) / static_cast<double>(batch_pairs);

  std::vector<std::size_t> sorted;
  for (const auto& [id, n] : st.epoch_counts) sorted.push_back(n);
  std::sort(sorted.begin(), sorted.end());
  st.max_count = sorted.back();
  auto pct_le = [&](double x) {
    const auto it = std::upper_bound(sorted.begin(), sorted.end(), x,
                                     [](double v, std::size_t n) { return v < static_cast<double>(n); });
    return 100.0 * static_cast<double>(it - sorted.begin()) / distinct;
  };
  auto thresholds = cfg.thresholds;
  std::sort(thresholds.begin(), thresholds.end());
  for (double x : thresholds) {
    if (x >= static_cast<double>(st.max_count)) break;
    st.cdf.push_back({x, pct_le(x)});
  }
  st.cdf.push_back({static_cast<double>(st.max_count), 100.0});
  return st;
}

std::string cdf_csv(const RedundancyStats& stats) {
  std::ostringstream out;
  out << "appearances,percent_of_news\n" << std::setprecision(17);
  for (const auto& p : stats.cdf) out << p.x << ',' << p.y << '\n';
  return out.str();
}

nlohmann::json to_json(const MetricsReport& m) {
  return {{"auc", m.auc},
          {"mrr", m.mrr},
          {"ndcg5", m.ndcg5},
          {"impression_count", m.impression_count},
          {"skipped_single_class", m.skipped_single_class}};
}

nlohmann::json to_json(const EnergyReport& e) {
  nlohmann::json j = {{"p_kw", e.p}, {"t_hours", e.t}, {"c_g_per_kwh", e.c}, {"co2e_g", e.co2e}};
  j["apc"] = e.apc ? nlohmann::json(*e.apc) : nlohmann::json(nullptr);
  return j;
}

nlohmann::json to_json(const RedundancyStats& r) {
  nlohmann::json cdf = nlohmann::json::array();
  for (const auto& p : r.cdf) cdf.push_back({{"x", p.x}, {"y", p.y}});
  return {{"distinct_news", r.epoch_counts.size()},
          {"total_occurrences", r.total_occurrences},
          {"mean_per_epoch", r.mean},
          {"per_user_mean", r.per_user_mean},
          {"per_batch_mean", r.per_batch_mean},
          {"per_batch_max", r.per_batch_max},
          {"max_per_epoch", r.max_count},
          {"batches", r.batches},
          {"cdf", cdf}};
}

}  // namespace oleo::evalgreen
