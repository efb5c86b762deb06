#include "season/common.hpp"

#include <cstdlib>
#include <iostream>
#include <mutex>

namespace season {

namespace {

LogLevel parse_env_level() {
  const char* env = std::getenv("SEASON_LOG");
  if (env == nullptr) return LogLevel::kInfo;
  std::string v(env);
  if (v == "error") return LogLevel::kError;
  if (v == "debug") return LogLevel::kDebug;
  return LogLevel::kInfo;
}

LogLevel& level_ref() {
  static LogLevel level = parse_env_level();
  return level;
}

std::mutex& log_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

LogLevel log_level() { return level_ref(); }

void set_log_level(LogLevel level) { level_ref() = level; }

void log_message(LogLevel level, const std::string& msg) {
  if (static_cast<int>(level) > static_cast<int>(log_level())) return;
  static const char* names[] = {"error", "info", "debug"};
  std::lock_guard<std::mutex> lock(log_mutex());
  std::cerr << "[" << names[static_cast<int>(level)] << "] " << msg << "\n";
}

}  // namespace season
