// log.hpp
// Minimal stderr logger. Data products never go through here.

#pragma once

#include <string>
#include <string_view>

namespace evstudy::log {

enum class Level { debug = 0, info = 1, warn = 2, error = 3, off = 4 };

void set_level(Level level);
Level level();

void debug(std::string_view msg);
void info(std::string_view msg);
void warn(std::string_view msg);
void error(std::string_view msg);

}  // namespace evstudy::log
