#include "har/log.hpp"

#include <atomic>
#include <iostream>

#include "har/errors.hpp"

namespace har::log {

namespace {
std::atomic<Level> g_level{Level::info};

const char* tag(Level level) {
    switch (level) {
        case Level::debug: return "debug";
        case Level::info: return "info";
        case Level::warn: return "warn";
        case Level::error: return "error";
    }
    return "?";
}
}  // namespace

void set_level(Level level) { g_level.store(level); }

void set_level(std::string_view name) {
    if (name == "debug") set_level(Level::debug);
    else if (name == "info") set_level(Level::info);
    else if (name == "warn") set_level(Level::warn);
    else if (name == "error") set_level(Level::error);
    else throw ValidationError("unknown log level: " + std::string(name));
}

Level level() { return g_level.load(); }

void write(Level lvl, const std::string& message) {
    if (lvl < g_level.load()) return;
    std::cerr << "[" << tag(lvl) << "] " << message << "\n";
}

}  // namespace har::log
