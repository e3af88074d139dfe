#include "canard_lab/log.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>

namespace canard::log {

namespace {

Level parse_env()
{
    const char* v = std::getenv("CANARD_LAB_LOG");
    if (!v) return Level::warn;
    std::string s(v);
    if (s == "debug") return Level::debug;
    if (s == "info") return Level::info;
    if (s == "error") return Level::error;
    if (s == "off") return Level::off;
    return Level::warn;
}

std::atomic<int> g_level{static_cast<int>(parse_env())};
std::atomic<long> g_warnings{0};
std::mutex g_mutex;

void emit(Level l, const char* tag, const std::string& msg)
{
    if (static_cast<int>(l) < g_level.load()) return;
    std::lock_guard<std::mutex> lock(g_mutex);
    std::cerr << "[canard_lab " << tag << "] " << msg << '\n';
}

} // namespace

Level level() { return static_cast<Level>(g_level.load()); }
void set_level(Level l) { g_level = static_cast<int>(l); }
void debug(const std::string& msg) { emit(Level::debug, "debug", msg); }
void info(const std::string& msg) { emit(Level::info, "info", msg); }
void warn(const std::string& msg)
{
    ++g_warnings;
    emit(Level::warn, "warn", msg);
}
void error(const std::string& msg) { emit(Level::error, "error", msg); }
long warning_count() { return g_warnings.load(); }

} // namespace canard::log
