// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string_view>

namespace oleo::util {

enum class LogLevel { Debug = 0, Info = 1, Warn = 2, Error = 3, Off = 4 };

void set_log_level(LogLevel level);
LogLevel log_level();
void log(LogLevel level, std::string_view message);

inline void log_info(std::string_view m) { log(LogLevel::Info, m); }
inline void log_warn(std::string_view m) { log(LogLevel::Warn, m); }
inline void log_debug(std::string_view m) { log(LogLevel::Debug, m); }

}  // namespace oleo::util
