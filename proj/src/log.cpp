#include "hidpas/log.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>

namespace hidpas {

namespace {

LogLevel initial_level() {
  LogLevel level = LogLevel::warn;
  if (const char* env = std::getenv("HIDPAS_LOG")) parse_log_level(env, level);
  return level;
}

std::atomic<int>& threshold() {
  static std::atomic<int> value{static_cast<int>(initial_level())};
  return value;
}

const char* name(LogLevel level) {
  switch (level) {
    case LogLevel::error: return "error";
    case LogLevel::warn: return "warn";
    case LogLevel::info: return "info";
    case LogLevel::debug: return "debug";
  }
  return "?";
}

}  // namespace

bool parse_log_level(const std::string& text, LogLevel& out) {
  for (LogLevel l : {LogLevel::error, LogLevel::warn, LogLevel::info, LogLevel::debug}) {
    if (text == name(l)) {
      out = l;
      return true;
    }
  }
  return false;
}

void set_log_level(LogLevel level) { threshold() = static_cast<int>(level); }
LogLevel log_level() { return static_cast<LogLevel>(threshold().load()); }

void log_message(LogLevel level, const std::string& message) {
  if (static_cast<int>(level) > threshold()) return;
  static std::mutex mu;
  std::lock_guard lock(mu);
  std::cerr << "hidpas [" << name(level) << "] " << message << "\n";
}

}  // namespace hidpas
