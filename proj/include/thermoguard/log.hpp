#pragma once

#include <cstdlib>
#include <iostream>
#include <string>

namespace thermoguard {

enum class LogLevel { kSilent = 0, kInfo = 1, kDebug = 2 };

// THERMOGUARD_LOG: silent|info|debug (or 0|1|2). Read once per process.
inline LogLevel log_level() {
  static const LogLevel level = [] {
    const char* raw = std::getenv("THERMOGUARD_LOG");
    if (raw == nullptr) return LogLevel::kInfo;
    const std::string v(raw);
    if (v == "silent" || v == "0") return LogLevel::kSilent;
    if (v == "debug" || v == "2") return LogLevel::kDebug;
    return LogLevel::kInfo;
  }();
  return level;
}

inline void log_info(const std::string& message) {
  if (log_level() >= LogLevel::kInfo) {
    std::cerr << "[info] " << message << "\n";
  }
}

inline void log_debug(const std::string& message) {
  if (log_level() >= LogLevel::kDebug) {
    std::cerr << "[debug] " << message << "\n";
  }
}

}  // namespace thermoguard
