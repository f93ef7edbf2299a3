// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cstdio>
#include <string>

namespace wcs {

enum class LogLevel { Debug = 0, Info = 1, Warn = 2, Silent = 3 };

inline std::atomic<LogLevel>& log_level() {
    static std::atomic<LogLevel> level{LogLevel::Warn};
    return level;
}

inline void log_at(LogLevel level, const char* tag, const std::string& message) {
    if (level < log_level().load()) return;
    std::fprintf(stderr, "[%s] %s\n", tag, message.c_str());
}

inline void log_debug(const std::string& message) { log_at(LogLevel::Debug, "debug", message); }
inline void log_info(const std::string& message) { log_at(LogLevel::Info, "info", message); }
inline void log_warn(const std::string& message) { log_at(LogLevel::Warn, "warn", message); }

}  // namespace wcs
