#pragma once

#include <iosfwd>
#include <string_view>

#include <nlohmann/json.hpp>

// Structured logging: one JSON object per line on the configured sink.
namespace fame::log {

enum class Level { kDebug = 0, kInfo = 1, kWarn = 2, kError = 3, kOff = 4 };

void set_level(Level level);
Level level();
// nullptr restores stderr.
void set_sink(std::ostream* sink);

void emit(Level level, std::string_view event, const nlohmann::json& fields = {});

inline void debug(std::string_view e, const nlohmann::json& f = {}) { emit(Level::kDebug, e, f); }
inline void info(std::string_view e, const nlohmann::json& f = {}) { emit(Level::kInfo, e, f); }
inline void warn(std::string_view e, const nlohmann::json& f = {}) { emit(Level::kWarn, e, f); }
inline void error(std::string_view e, const nlohmann::json& f = {}) { emit(Level::kError, e, f); }

}  // namespace fame::log
