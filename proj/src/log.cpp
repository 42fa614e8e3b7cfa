#include "conewalk/log.hpp"

#include <cstdlib>
#include <iostream>
#include <mutex>

namespace conewalk {

namespace {

LogLevel parse_level() {
    const char* env = std::getenv("CONEWALK_LOG");
    if (env == nullptr) return LogLevel::warn;
    const std::string v(env);
    if (v == "error") return LogLevel::error;
    if (v == "warn") return LogLevel::warn;
    if (v == "info") return LogLevel::info;
    if (v == "debug") return LogLevel::debug;
    return LogLevel::warn;
}

const char* level_tag(LogLevel level) {
    switch (level) {
        case LogLevel::error: return "error";
        case LogLevel::warn: return "warn";
        case LogLevel::info: return "info";
        case LogLevel::debug: return "debug";
    }
    return "?";
}

std::mutex g_log_mutex;

}  // namespace

LogLevel log_level() {
    static const LogLevel level = parse_level();
    return level;
}

void log(LogLevel level, const std::string& message) {
    if (static_cast<int>(level) > static_cast<int>(log_level())) return;
    std::lock_guard<std::mutex> lock(g_log_mutex);
    std::cerr << "[" << level_tag(level) << "] " << message << "\n";
}

}  // namespace conewalk
