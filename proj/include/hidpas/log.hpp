#pragma once

// Minimal leveled logging to stderr. The threshold starts from the
// HIDPAS_LOG environment variable (error|warn|info|debug, default warn).

#include <string>

namespace hidpas {

enum class LogLevel { error = 0, warn = 1, info = 2, debug = 3 };

void set_log_level(LogLevel level);
LogLevel log_level();
bool parse_log_level(const std::string& text, LogLevel& out);

void log_message(LogLevel level, const std::string& message);
inline void log_warn(const std::string& m) { log_message(LogLevel::warn, m); }
inline void log_info(const std::string& m) { log_message(LogLevel::info, m); }
inline void log_debug(const std::string& m) { log_message(LogLevel::debug, m); }

}  // namespace hidpas
