// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace oleo::corpus {

struct Candidate {
  std::string news_id;
  int label = 0;  // 0 or 1
};

struct ImpressionRecord {
  std::string impression_id;
  std::string user_id;
  std::vector<std::string> history;  // clicked, chronological, most recent last
  std::vector<Candidate> candidates;
  std::size_t source_row = 0;
};

enum class UnknownNewsPolicy {
  DropRecord,  // skip the whole record and count it
  DropIds,     // remove unknown ids from history/candidates, keep the record if candidates remain
  Fail,        // throw LookupError
};

struct BehaviorsOptions {
  std::size_t max_history = 30;
  UnknownNewsPolicy unknown_policy = UnknownNewsPolicy::DropRecord;
};

struct BehaviorsLoad {
  std::vector<ImpressionRecord> records;
  std::size_t dropped_records = 0;
  std::size_t dropped_ids = 0;
};

// MIND TSV: impression_id, user_id, time, space-separated history,
// space-separated "newsid-label" impressions.
BehaviorsLoad load_behaviors(const std::filesystem::path& path,
                             const std::function<bool(const std::string&)>& known_news,
                             const BehaviorsOptions& options = {});

// Writes records back in the same TSV layout (time column left empty).
void save_behaviors(const std::filesystem::path& path, const std::vector<ImpressionRecord>& records);

}  // namespace oleo::corpus
