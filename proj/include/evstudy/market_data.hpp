// market_data.hpp
// Daily OHLCV ingestion, trading-calendar alignment, log returns, and
// Fama-French style factor files.
//
// Every per-security series is stored densely against the trading calendar:
// slot i holds the observation for calendar()[i] or nullopt when the security
// did not trade (or has no row) that day.

#pragma once

#include "evstudy/date.hpp"

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace evstudy {

struct Bar {
    double open = 0.0;
    double high = 0.0;
    double low = 0.0;
    double close = 0.0;
    double volume = 0.0;
};

class TradingCalendar {
public:
    TradingCalendar() = default;
    // Throws DataError unless `dates` is strictly increasing.
    explicit TradingCalendar(std::vector<Date> dates);

    std::size_t size() const { return dates_.size(); }
    bool empty() const { return dates_.empty(); }
    const Date& operator[](std::size_t i) const { return dates_[i]; }
    std::span<const Date> dates() const { return dates_; }
    Date front() const { return dates_.front(); }
    Date back() const { return dates_.back(); }

    std::optional<std::size_t> index_of(Date d) const;
    bool contains(Date d) const { return index_of(d).has_value(); }
    // Throws DataError naming the date when it is not a trading day.
    std::size_t require_index(Date d) const;

private:
    std::vector<Date> dates_;
};

// Calendar slot `offset` trading days away from `event_date` (offset 0 is the
// event itself). Throws DataError if the event date is not a trading day or
// the walk leaves the calendar.
std::size_t relative_position(const TradingCalendar& calendar, Date event_date, int offset);
Date relative_index(const TradingCalendar& calendar, Date event_date, int offset);

struct SecuritySeries {
    std::string ticker;
    std::vector<std::optional<Bar>> bars;  // aligned with the calendar

    std::size_t observation_count() const;
};

struct PricePanel {
    TradingCalendar calendar;
    std::string calendar_source;
    std::vector<SecuritySeries> securities;  // sorted by ticker

    const SecuritySeries* find(std::string_view ticker) const;
    // Throws DataError when absent.
    const SecuritySeries& at(std::string_view ticker) const;
    std::vector<std::string> tickers() const;
};

// CSV schema: header `date,ticker,open,high,low,close,volume`, ISO dates,
// one row per (ticker, date). The calendar is the set of dates on which
// `calendar_source` has a row.
PricePanel load_panel(const std::filesystem::path& path, std::string_view calendar_source);
PricePanel parse_panel(std::istream& in, std::string_view calendar_source,
                       std::string_view source_name = "<stream>");

// Rows ordered by (ticker, date); numbers in shortest round-trip form.
void write_panel(std::ostream& out, const PricePanel& panel);

struct ReturnSeries {
    std::string ticker;
    std::vector<std::optional<double>> values;  // aligned with the calendar

    std::size_t observation_count() const;
};

// ln(close_t / close_{t-1}); defined only when both calendar days have a close.
ReturnSeries log_returns(const SecuritySeries& series);
std::vector<ReturnSeries> log_returns(const PricePanel& panel);

struct FactorRow {
    double mkt_rf = 0.0;  // daily excess market return, decimal
    double rf = 0.0;      // daily risk-free rate, decimal
};

struct FactorSeries {
    std::vector<std::optional<FactorRow>> rows;  // aligned with the calendar
    std::vector<Date> missing;                   // trading days with no factor row
};

// CSV schema: header `date,mkt_rf,smb,hml,rf`, dates `YYYYMMDD` or ISO.
// Values arrive in percent and are converted to decimals.
FactorSeries load_factors(const std::filesystem::path& path, const TradingCalendar& calendar);
FactorSeries parse_factors(std::istream& in, const TradingCalendar& calendar,
                           std::string_view source_name = "<stream>");

}  // namespace evstudy
