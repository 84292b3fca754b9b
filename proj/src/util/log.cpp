// SPDX-License-Identifier: Apache-2.0
#include "oleo/util/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace oleo::util {

namespace {
std::atomic<LogLevel> g_level{LogLevel::Warn};
std::mutex g_mutex;
constexpr const char* kNames[] = {"debug", "info", "warn", "error"};
}  // namespace

void set_log_level(LogLevel level) { g_level = level; }
LogLevel log_level() { return g_level; }

void log(LogLevel level, std::string_view message) {
  if (level < g_level.load() || level == LogLevel::Off) return;
  std::lock_guard lock(g_mutex);
  std::cerr << "[oleo " << kNames[static_cast<int>(level)] << "] " << message << '\n';
}

}  // namespace oleo::util
