// SPDX-License-Identifier: Apache-2.0
#include "oleo/corpus/behaviors.hpp"

#include <fstream>
#include <sstream>

#include "oleo/error.hpp"

namespace oleo::corpus {

namespace {

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

}  // namespace

BehaviorsLoad load_behaviors(const std::filesystem::path& path,
                             const std::function<bool(const std::string&)>& known_news,
                             const BehaviorsOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open behaviors file " + path.string());
  BehaviorsLoad result;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto where = path.string() + " row " + std::to_string(row);

    std::vector<std::string> cols;
    std::size_t start = 0;
    while (true) {
      auto pos = line.find('\t', start);
      cols.push_back(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
      if (pos == std::string::npos) break;
      start = pos + 1;
    }
    if (cols.size() < 5) {
      throw FormatError(where + ": expected 5 tab-separated columns, found " + std::to_string(cols.size()));
    }

    ImpressionRecord rec;
    rec.impression_id = cols[0];
    rec.user_id = cols[1];
    rec.source_row = row;
    rec.history = split_ws(cols[3]);
    for (const auto& item : split_ws(cols[4])) {
      const auto dash = item.rfind('-');
      if (dash == std::string::npos || dash == 0 || dash + 1 >= item.size()) {
        throw FormatError(where + ": impression '" + item + "' is not of the form newsid-label");
      }
      const auto label = item.substr(dash + 1);
      if (label != "0" && label != "1") throw FormatError(where + ": label in '" + item + "' must be 0 or 1");
      rec.candidates.push_back({item.substr(0, dash), label == "1" ? 1 : 0});
    }
    if (rec.candidates.empty()) throw FormatError(where + ": impression list is empty");

    bool unknown = false;
    std::vector<std::string> kept_history;
    for (auto& id : rec.history) {
      if (known_news(id)) {
        kept_history.push_back(std::move(id));
      } else {
        unknown = true;
        ++result.dropped_ids;
        if (options.unknown_policy == UnknownNewsPolicy::Fail) throw LookupError(where + ": unknown news id '" + id + "'");
      }
    }
    std::vector<Candidate> kept_candidates;
    for (auto& c : rec.candidates) {
      if (known_news(c.news_id)) {
        kept_candidates.push_back(std::move(c));
      } else {
        unknown = true;
        ++result.dropped_ids;
        if (options.unknown_policy == UnknownNewsPolicy::Fail) {
          throw LookupError(where + ": unknown news id '" + c.news_id + "'");
        }
      }
    }
    if (unknown && options.unknown_policy == UnknownNewsPolicy::DropRecord) {
      ++result.dropped_records;
      continue;
    }
    rec.history = std::move(kept_history);
    rec.candidates = std::move(kept_candidates);
    if (rec.candidates.empty()) {
      ++result.dropped_records;
      continue;
    }
    if (rec.history.size() > options.max_history) {
      rec.history.erase(rec.history.begin(),
                        rec.history.begin() + static_cast<std::ptrdiff_t>(rec.history.size() - options.max_history));
    }
    result.records.push_back(std::move(rec));
  }
  return result;
}

void save_behaviors(const std::filesystem::path& path, const std::vector<ImpressionRecord>& records) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (const auto& r : records) {
    out << r.impression_id << '\t' << r.user_id << '\t' << '\t';
    for (std::size_t i = 0; i < r.history.size(); ++i) out << (i ? " " : "") << r.history[i];
    out << '\t';
    for (std::size_t i = 0; i < r.candidates.size(); ++i) {
      out << (i ? " " : "") << r.candidates[i].news_id << '-' << r.candidates[i].label;
    }
    out << '\n';
  }
}

}  // namespace oleo::corpus
