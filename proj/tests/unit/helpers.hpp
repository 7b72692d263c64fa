// Fixtures shared by the unit tests.

#pragma once

#include "evstudy/market_data.hpp"
#include "evstudy/market_model.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace fixture {

using namespace evstudy;

inline std::vector<Date> weekdays(Date start, std::size_t n) {
    std::vector<Date> out;
    for (Date d = start; out.size() < n; d = Date(d.days() + 1)) {
        if (!d.is_weekend()) out.push_back(d);
    }
    return out;
}

inline PricePanel parse(const std::string& csv, const std::string& source = "IDX") {
    std::istringstream in(csv);
    return parse_panel(in, source, "test.csv");
}

// Close-only series: open = close, high/low bracket it by `range`.
struct Path {
    std::string ticker;
    std::vector<double> closes;
    std::vector<double> volumes;  // empty: 1000 each day
    double range = 0.0;
};

inline PricePanel make_panel(const std::vector<Date>& dates, const std::vector<Path>& paths,
                             const std::string& source) {
    PricePanel p;
    p.calendar = TradingCalendar(dates);
    p.calendar_source = source;
    for (const auto& path : paths) {
        SecuritySeries s;
        s.ticker = path.ticker;
        for (std::size_t i = 0; i < dates.size(); ++i) {
            if (i >= path.closes.size() || std::isnan(path.closes[i])) {
                s.bars.push_back(std::nullopt);
                continue;
            }
            const double c = path.closes[i];
            const double v = path.volumes.empty() ? 1000.0 : path.volumes[i];
            s.bars.push_back(Bar{c, c + path.range, c - path.range, c, v});
        }
        p.securities.push_back(std::move(s));
    }
    std::sort(p.securities.begin(), p.securities.end(),
              [](const auto& a, const auto& b) { return a.ticker < b.ticker; });
    return p;
}

inline std::vector<double> closes_from_returns(double p0, const std::vector<double>& r) {
    std::vector<double> c{p0};
    for (double x : r) c.push_back(c.back() * std::exp(x));
    return c;
}

inline FactorSeries flat_factors(const TradingCalendar& cal, const std::vector<double>& mkt_rf, double rf) {
    FactorSeries f;
    for (std::size_t i = 0; i < cal.size(); ++i) f.rows.push_back(FactorRow{i < mkt_rf.size() ? mkt_rf[i] : 0.0, rf});
    return f;
}

inline std::string bundled(const std::string& rel) { return std::string(EVSTUDY_SOURCE_DIR) + "/" + rel; }

}  // namespace fixture
