// errors.hpp
// Exception types. Each maps onto one CLI exit status.

#pragma once

#include <stdexcept>
#include <string>

namespace evstudy {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Degenerate numerics: zero variance, too few observations, undefined statistics.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ExitCode : int { ok = 0, config = 1, data = 2, numerical = 3 };

}  // namespace evstudy
