// text.hpp
// Small CSV and number-formatting helpers shared by the loaders and writers.

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace evstudy::text {

std::string_view trim(std::string_view s);
std::vector<std::string_view> split(std::string_view line, char sep = ',');

std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_int(std::string_view s);

// Shortest representation that parses back to the same double.
std::string shortest(double value);
// Fixed-point with `decimals` digits; "-0.0000" is normalised to "0.0000".
std::string fixed(double value, int decimals);

}  // namespace evstudy::text
