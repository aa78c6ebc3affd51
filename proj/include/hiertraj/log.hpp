#pragma once

#include <cstdlib>
#include <iostream>
#include <string>

namespace hiertraj {

enum class LogLevel { quiet = 0, info = 1, trace = 2 };

// Diagnostic verbosity from HIERTRAJ_LOG in {quiet, info, trace}; default info.
inline LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("HIERTRAJ_LOG");
    if (env == nullptr) return LogLevel::info;
    const std::string v(env);
    if (v == "quiet") return LogLevel::quiet;
    if (v == "trace") return LogLevel::trace;
    return LogLevel::info;
  }();
  return level;
}

}  // namespace hiertraj

#define HIERTRAJ_INFO(expr)                                        \
  do {                                                             \
    if (::hiertraj::log_level() >= ::hiertraj::LogLevel::info)     \
      std::cerr << "[hiertraj] " << expr << "\n";                  \
  } while (0)

#define HIERTRAJ_TRACE(expr)                                       \
  do {                                                             \
    if (::hiertraj::log_level() >= ::hiertraj::LogLevel::trace)    \
      std::cerr << "[hiertraj] " << expr << "\n";                  \
  } while (0)
