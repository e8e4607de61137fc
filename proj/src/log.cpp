#include "fame/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace fame::log {
namespace {

std::atomic<Level> g_level{Level::kInfo};
std::ostream* g_sink = nullptr;
std::mutex g_mu;

const char* level_name(Level l) {
  switch (l) {
    case Level::kDebug: return "debug";
    case Level::kInfo: return "info";
    case Level::kWarn: return "warn";
    case Level::kError: return "error";
    case Level::kOff: return "off";
  }
  return "?";
}

}  // namespace

void set_level(Level level) { g_level = level; }
Level level() { return g_level; }

void set_sink(std::ostream* sink) {
  std::lock_guard lock(g_mu);
  g_sink = sink;
}

void emit(Level lvl, std::string_view event, const nlohmann::json& fields) {
  if (lvl < g_level.load() || g_level.load() == Level::kOff) return;
  nlohmann::json line = {{"level", level_name(lvl)}, {"event", std::string(event)}};
  if (fields.is_object()) {
    for (auto it = fields.begin(); it != fields.end(); ++it) line[it.key()] = it.value();
  }
  const std::string text = line.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
  std::lock_guard lock(g_mu);
  std::ostream& out = g_sink ? *g_sink : std::cerr;
  out << text << '\n';
}

}  // namespace fame::log
