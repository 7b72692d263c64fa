#include "evstudy/market_data.hpp"

#include "evstudy/errors.hpp"
#include "evstudy/log.hpp"
#include "evstudy/text.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

namespace evstudy {

// ---------------------------------------------------------------------------
// TradingCalendar

TradingCalendar::TradingCalendar(std::vector<Date> dates) : dates_(std::move(dates)) {
    for (std::size_t i = 1; i < dates_.size(); ++i) {
        if (!(dates_[i - 1] < dates_[i])) {
            throw DataError("trading calendar not strictly increasing at " + dates_[i].iso());
        }
    }
}

std::optional<std::size_t> TradingCalendar::index_of(Date d) const {
    auto it = std::lower_bound(dates_.begin(), dates_.end(), d);
    if (it == dates_.end() || *it != d) return std::nullopt;
    return static_cast<std::size_t>(it - dates_.begin());
}

std::size_t TradingCalendar::require_index(Date d) const {
    if (auto idx = index_of(d)) return *idx;
    throw DataError(d.iso() + " is not a trading day");
}

std::size_t relative_position(const TradingCalendar& calendar, Date event_date, int offset) {
    const auto base = static_cast<long long>(calendar.require_index(event_date));
    const long long target = base + offset;
    if (target < 0 || target >= static_cast<long long>(calendar.size())) {
        throw DataError("offset " + std::to_string(offset) + " from " + event_date.iso() +
                        " falls outside the trading calendar");
    }
    return static_cast<std::size_t>(target);
}

Date relative_index(const TradingCalendar& calendar, Date event_date, int offset) {
    return calendar[relative_position(calendar, event_date, offset)];
}

// ---------------------------------------------------------------------------
// PricePanel

std::size_t SecuritySeries::observation_count() const {
    return static_cast<std::size_t>(
        std::count_if(bars.begin(), bars.end(), [](const auto& b) { return b.has_value(); }));
}

const SecuritySeries* PricePanel::find(std::string_view ticker) const {
    auto it = std::lower_bound(securities.begin(), securities.end(), ticker,
                               [](const SecuritySeries& s, std::string_view t) { return s.ticker < t; });
    if (it == securities.end() || it->ticker != ticker) return nullptr;
    return &*it;
}

const SecuritySeries& PricePanel::at(std::string_view ticker) const {
    if (const auto* s = find(ticker)) return *s;
    throw DataError("ticker '" + std::string(ticker) + "' not present in price panel");
}

std::vector<std::string> PricePanel::tickers() const {
    std::vector<std::string> out;
    out.reserve(securities.size());
    for (const auto& s : securities) out.push_back(s.ticker);
    return out;
}

namespace {

struct RawRow {
    Date date;
    Bar bar;
    std::size_t line = 0;
};

[[noreturn]] void row_error(std::string_view source, std::size_t line, const std::string& what) {
    throw DataError(std::string(source) + ":" + std::to_string(line) + ": " + what);
}

void validate_bar(const Bar& b, std::string_view source, std::size_t line) {
    if (b.open <= 0 || b.high <= 0 || b.low <= 0 || b.close <= 0) {
        row_error(source, line, "non-positive price");
    }
    if (b.volume < 0) row_error(source, line, "negative volume");
    if (b.high < b.low) {
        row_error(source, line,
                  "high " + text::shortest(b.high) + " < low " + text::shortest(b.low));
    }
    if (b.high < std::max(b.open, b.close)) row_error(source, line, "high below open/close");
    if (b.low > std::min(b.open, b.close)) row_error(source, line, "low above open/close");
}

}  // namespace

PricePanel parse_panel(std::istream& in, std::string_view calendar_source,
                       std::string_view source_name) {
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    std::map<std::string, std::vector<RawRow>, std::less<>> rows;

    while (std::getline(in, line)) {
        ++line_no;
        const auto trimmed = text::trim(line);
        if (trimmed.empty()) continue;
        if (!have_header) {
            const auto cols = text::split(trimmed);
            const std::vector<std::string_view> expected = {"date", "ticker", "open", "high",
                                                            "low",  "close",  "volume"};
            if (cols != expected) {
                row_error(source_name, line_no,
                          "expected header date,ticker,open,high,low,close,volume");
            }
            have_header = true;
            continue;
        }
        const auto cols = text::split(trimmed);
        if (cols.size() != 7) {
            row_error(source_name, line_no, "expected 7 fields, got " + std::to_string(cols.size()));
        }
        RawRow row;
        row.line = line_no;
        try {
            row.date = Date::parse_iso(cols[0]);
        } catch (const DataError& e) {
            row_error(source_name, line_no, e.what());
        }
        if (cols[1].empty()) row_error(source_name, line_no, "empty ticker");
        double* fields[] = {&row.bar.open, &row.bar.high, &row.bar.low, &row.bar.close,
                            &row.bar.volume};
        for (std::size_t k = 0; k < 5; ++k) {
            auto v = text::parse_double(cols[k + 2]);
            if (!v) row_error(source_name, line_no, "unparseable number '" + std::string(cols[k + 2]) + "'");
            *fields[k] = *v;
        }
        validate_bar(row.bar, source_name, line_no);
        rows[std::string(cols[1])].push_back(row);
    }
    if (!have_header) throw DataError(std::string(source_name) + ": empty price file");

    for (auto& [ticker, list] : rows) {
        std::stable_sort(list.begin(), list.end(),
                         [](const RawRow& a, const RawRow& b) { return a.date < b.date; });
        for (std::size_t i = 1; i < list.size(); ++i) {
            if (list[i].date == list[i - 1].date) {
                row_error(source_name, list[i].line,
                          "duplicate row for (" + ticker + ", " + list[i].date.iso() + ")");
            }
        }
    }

    auto src = rows.find(calendar_source);
    if (src == rows.end()) {
        throw DataError(std::string(source_name) + ": calendar source '" +
                        std::string(calendar_source) + "' has no rows");
    }
    std::vector<Date> dates;
    dates.reserve(src->second.size());
    for (const auto& r : src->second) dates.push_back(r.date);

    PricePanel panel;
    panel.calendar = TradingCalendar(std::move(dates));
    panel.calendar_source = std::string(calendar_source);
    panel.securities.reserve(rows.size());
    for (auto& [ticker, list] : rows) {
        SecuritySeries series;
        series.ticker = ticker;
        series.bars.assign(panel.calendar.size(), std::nullopt);
        for (const auto& r : list) {
            auto idx = panel.calendar.index_of(r.date);
            if (!idx) {
                row_error(source_name, r.line,
                          r.date.iso() + " is not a trading day of " + std::string(calendar_source));
            }
            series.bars[*idx] = r.bar;
        }
        panel.securities.push_back(std::move(series));
    }
    return panel;
}

PricePanel load_panel(const std::filesystem::path& path, std::string_view calendar_source) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open price file " + path.string());
    return parse_panel(in, calendar_source, path.string());
}

void write_panel(std::ostream& out, const PricePanel& panel) {
    out << "date,ticker,open,high,low,close,volume\n";
    for (const auto& s : panel.securities) {
        for (std::size_t i = 0; i < s.bars.size(); ++i) {
            if (!s.bars[i]) continue;
            const Bar& b = *s.bars[i];
            out << panel.calendar[i].iso() << ',' << s.ticker << ',' << text::shortest(b.open) << ','
                << text::shortest(b.high) << ',' << text::shortest(b.low) << ','
                << text::shortest(b.close) << ',' << text::shortest(b.volume) << '\n';
        }
    }
}

// ---------------------------------------------------------------------------
// Returns

std::size_t ReturnSeries::observation_count() const {
    return static_cast<std::size_t>(
        std::count_if(values.begin(), values.end(), [](const auto& v) { return v.has_value(); }));
}

ReturnSeries log_returns(const SecuritySeries& series) {
    ReturnSeries out;
    out.ticker = series.ticker;
    out.values.assign(series.bars.size(), std::nullopt);
    for (std::size_t i = 1; i < series.bars.size(); ++i) {
        if (series.bars[i] && series.bars[i - 1]) {
            out.values[i] = std::log(series.bars[i]->close / series.bars[i - 1]->close);
        }
    }
    return out;
}

std::vector<ReturnSeries> log_returns(const PricePanel& panel) {
    std::vector<ReturnSeries> out;
    out.reserve(panel.securities.size());
    for (const auto& s : panel.securities) out.push_back(log_returns(s));
    return out;
}

// ---------------------------------------------------------------------------
// Factors

FactorSeries parse_factors(std::istream& in, const TradingCalendar& calendar,
                           std::string_view source_name) {
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    std::size_t n_rows = 0;
    std::size_t n_implausible = 0;
    FactorSeries out;
    out.rows.assign(calendar.size(), std::nullopt);

    while (std::getline(in, line)) {
        ++line_no;
        const auto trimmed = text::trim(line);
        if (trimmed.empty()) continue;
        if (!have_header) {
            const auto cols = text::split(trimmed);
            const std::vector<std::string_view> expected = {"date", "mkt_rf", "smb", "hml", "rf"};
            if (cols != expected) row_error(source_name, line_no, "expected header date,mkt_rf,smb,hml,rf");
            have_header = true;
            continue;
        }
        const auto cols = text::split(trimmed);
        if (cols.size() != 5) {
            row_error(source_name, line_no, "expected 5 fields, got " + std::to_string(cols.size()));
        }
        Date date;
        try {
            date = Date::parse_any(cols[0]);
        } catch (const DataError& e) {
            row_error(source_name, line_no, e.what());
        }
        const auto mkt = text::parse_double(cols[1]);
        const auto rf = text::parse_double(cols[4]);
        if (!mkt || !rf) row_error(source_name, line_no, "unparseable factor value");
        if (calendar.empty() || date < calendar.front() || date > calendar.back()) {
            row_error(source_name, line_no, date.iso() + " outside calendar span");
        }
        const auto idx = calendar.index_of(date);
        if (!idx) row_error(source_name, line_no, date.iso() + " is not a trading day");
        if (out.rows[*idx]) row_error(source_name, line_no, "duplicate factor row for " + date.iso());

        FactorRow row{*mkt / 100.0, *rf / 100.0};
        if (std::abs(row.mkt_rf) >= 0.5 || std::abs(row.rf) >= 0.5) ++n_implausible;
        out.rows[*idx] = row;
        ++n_rows;
    }
    if (n_rows == 0) throw DataError(std::string(source_name) + ": no factor rows");

    for (std::size_t i = 0; i < calendar.size(); ++i) {
        if (!out.rows[i]) out.missing.push_back(calendar[i]);
    }
    log::info(std::string(source_name) + ": converted " + std::to_string(n_rows) +
              " factor rows from percent to decimal");
    if (n_implausible > 0) {
        log::warn(std::string(source_name) + ": " + std::to_string(n_implausible) +
                  " factor rows with implausible daily magnitude (|rate| >= 0.5)");
    }
    if (!out.missing.empty()) {
        log::warn(std::string(source_name) + ": " + std::to_string(out.missing.size()) +
                  " trading days have no factor row (first " + out.missing.front().iso() + ")");
    }
    return out;
}

FactorSeries load_factors(const std::filesystem::path& path, const TradingCalendar& calendar) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open factor file " + path.string());
    return parse_factors(in, calendar, path.string());
}

}  // namespace evstudy
