// date.hpp
// Civil calendar date stored as a day count since 1970-01-01.

#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace evstudy {

class Date {
public:
    constexpr Date() = default;
    constexpr explicit Date(std::int32_t days_since_epoch) : days_(days_since_epoch) {}

    static Date from_ymd(int year, unsigned month, unsigned day);

    // Accepts `YYYY-MM-DD`. Throws DataError on malformed input.
    static Date parse_iso(std::string_view text);
    // Accepts `YYYYMMDD` or `YYYY-MM-DD`.
    static Date parse_any(std::string_view text);

    constexpr std::int32_t days() const { return days_; }
    int year() const;
    unsigned month() const;
    unsigned day() const;
    // 0 = Monday ... 6 = Sunday
    unsigned weekday() const;
    bool is_weekend() const { return weekday() >= 5; }

    std::string iso() const;

    constexpr auto operator<=>(const Date&) const = default;

private:
    std::int32_t days_ = 0;
};

}  // namespace evstudy
