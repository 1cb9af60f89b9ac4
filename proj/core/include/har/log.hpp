#pragma once

#include <string>
#include <string_view>

namespace har::log {

enum class Level { debug = 0, info = 1, warn = 2, error = 3 };

void set_level(Level level);
/// Accepts "debug", "info", "warn", "error"; throws ValidationError otherwise.
void set_level(std::string_view name);
Level level();

void write(Level level, const std::string& message);

inline void debug(const std::string& m) { write(Level::debug, m); }
inline void info(const std::string& m) { write(Level::info, m); }
inline void warn(const std::string& m) { write(Level::warn, m); }
inline void error(const std::string& m) { write(Level::error, m); }

}  // namespace har::log
