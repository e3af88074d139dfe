#pragma once

#include <string>

namespace canard::log {

enum class Level { debug = 0, info = 1, warn = 2, error = 3, off = 4 };

// level comes from CANARD_LAB_LOG (debug|info|warn|error|off), default warn
Level level();
void set_level(Level l);
void debug(const std::string& msg);
void info(const std::string& msg);
void warn(const std::string& msg);
void error(const std::string& msg);
// total warnings emitted by this process, whether printed or not
long warning_count();

} // namespace canard::log
