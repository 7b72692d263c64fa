#include "evstudy/event_study.hpp"

#include "evstudy/errors.hpp"
#include "evstudy/text.hpp"

#include <algorithm>
#include <ostream>
#include <set>

namespace evstudy {

void EventSpec::validate() const {
    if (!(pre_window.start <= pre_window.end && pre_window.end <= -1)) {
        throw ConfigError("event '" + name + "': pre window must satisfy start <= end <= -1");
    }
    if (post_window.start != 0 || post_window.end < 0) {
        throw ConfigError("event '" + name + "': post window must start at 0 and end >= 0");
    }
    feature_window.validate();
}

int EventSpec::first_day() const { return std::min(pre_window.start, feature_window.first_day()); }
int EventSpec::last_day() const { return std::max(post_window.end, feature_window.last_day()); }

std::string_view to_string(CategoryKind kind) {
    switch (kind) {
        case CategoryKind::all: return "all";
        case CategoryKind::clustered_4var: return "clustered_4var";
        case CategoryKind::clustered_5var: return "clustered_5var";
        case CategoryKind::custom: return "custom";
    }
    return "?";
}

void SampleCategory::validate(std::span<const std::string> universe, std::string_view focal) const {
    if (tickers.empty()) throw ConfigError("category '" + name + "' is empty");
    for (const auto& t : tickers) {
        if (std::find(universe.begin(), universe.end(), t) == universe.end()) {
            throw ConfigError("category '" + name + "': ticker '" + t + "' not in universe");
        }
    }
    if ((kind == CategoryKind::clustered_4var || kind == CategoryKind::clustered_5var) &&
        std::find(tickers.begin(), tickers.end(), focal) == tickers.end()) {
        throw ConfigError("category '" + name + "' does not contain focal security '" + std::string(focal) + "'");
    }
}

std::optional<double> car(const AbnormalReturnMatrix& ars, std::size_t row, int t1, int t2) {
    double sum = 0.0;
    for (int day = t1; day <= t2; ++day) {
        const auto ar = ars.at(row, day);
        if (!ar) return std::nullopt;
        sum += *ar;
    }
    return sum;
}

namespace {

std::size_t require_row(const AbnormalReturnMatrix& ars, const std::string& ticker) {
    if (auto row = ars.row_of(ticker)) return *row;
    throw DataError("no abnormal returns for '" + ticker + "'");
}

double mean(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

}  // namespace

CaarResult caar(const AbnormalReturnMatrix& ars, const SampleCategory& category, int t1, int t2,
                std::size_t min_securities) {
    CaarResult r;
    for (const auto& t : category.tickers) {
        const auto row = require_row(ars, t);
        if (auto c = car(ars, row, t1, t2)) {
            r.tickers.push_back(t);
            r.cars.push_back(*c);
        } else {
            r.excluded.push_back({t, "missing_ar",
                                  "abnormal return missing in [" + std::to_string(t1) + ", " +
                                      std::to_string(t2) + "]"});
        }
    }
    if (r.cars.size() < std::max<std::size_t>(min_securities, 1)) {
        throw NumericalError("category '" + category.name + "': only " + std::to_string(r.cars.size()) +
                             " securities contribute to CAAR(" + std::to_string(t1) + ", " +
                             std::to_string(t2) + ")");
    }
    r.caar = mean(r.cars);
    return r;
}

double caar_from_daily_means(const AbnormalReturnMatrix& ars, const SampleCategory& category, int t1, int t2) {
    std::vector<std::size_t> rows;
    for (const auto& t : category.tickers) rows.push_back(require_row(ars, t));
    double total = 0.0;
    for (int day = t1; day <= t2; ++day) {
        double s = 0.0;
        for (auto row : rows) {
            const auto ar = ars.at(row, day);
            if (!ar) throw DataError("caar_from_daily_means: missing cell");
            s += *ar;
        }
        total += s / static_cast<double>(rows.size());
    }
    return total;
}

namespace {

// Running CARs from `start`; a security drops out permanently at its first gap.
std::vector<CaarPoint> accumulate(const AbnormalReturnMatrix& ars, const std::vector<std::size_t>& rows,
                                  const std::vector<std::string>& tickers, int start, int end,
                                  ExclusionList& excluded, std::set<std::string>& reported) {
    std::vector<CaarPoint> points;
    std::vector<double> running(rows.size(), 0.0);
    std::vector<bool> alive(rows.size(), true);
    for (int day = start; day <= end; ++day) {
        CaarPoint p;
        p.day = day;
        for (std::size_t k = 0; k < rows.size(); ++k) {
            if (!alive[k]) continue;
            const auto ar = ars.at(rows[k], day);
            if (!ar) {
                alive[k] = false;
                if (reported.insert(tickers[k]).second) {
                    excluded.push_back({tickers[k], "missing_ar", "no abnormal return on day " + std::to_string(day)});
                }
                continue;
            }
            running[k] += *ar;
            p.cars.push_back(running[k]);
        }
        p.caar = p.cars.empty() ? 0.0 : mean(p.cars);
        points.push_back(std::move(p));
    }
    return points;
}

}  // namespace

EventCaar caar_series(const AbnormalReturnMatrix& ars, const SampleCategory& category, const EventSpec& event,
                      PreWindowMode mode) {
    std::vector<std::size_t> rows;
    for (const auto& t : category.tickers) rows.push_back(require_row(ars, t));
    if (!ars.covers(event.pre_window.start) || !ars.covers(event.post_window.end)) {
        throw DataError("event '" + event.name + "': abnormal-return matrix does not cover the event windows");
    }

    EventCaar out;
    std::set<std::string> reported;
    if (mode == PreWindowMode::accumulated) {
        out.pre = accumulate(ars, rows, category.tickers, event.pre_window.start, event.pre_window.end,
                             out.excluded, reported);
    } else {
        for (int day = event.pre_window.start; day <= event.pre_window.end; ++day) {
            auto single = accumulate(ars, rows, category.tickers, day, day, out.excluded, reported);
            out.pre.push_back(std::move(single.front()));
        }
    }
    out.post = accumulate(ars, rows, category.tickers, event.post_window.start, event.post_window.end,
                          out.excluded, reported);
    return out;
}

void write_caar_csv_header(std::ostream& out) { out << "event,category,relative_day,caar,n_securities\n"; }

void write_caar_csv_rows(std::ostream& out, std::string_view event, std::string_view category,
                         const EventCaar& series) {
    for (const auto* part : {&series.pre, &series.post}) {
        for (const auto& p : *part) {
            out << event << ',' << category << ',' << p.day << ',' << text::shortest(p.caar) << ',' << p.n()
                << '\n';
        }
    }
}

void write_caar_plot(std::ostream& out, const EventCaar& series) {
    out << "relative_day,caar\n";
    for (const auto* part : {&series.pre, &series.post}) {
        for (const auto& p : *part) out << p.day << ',' << text::shortest(p.caar) << '\n';
    }
}

}  // namespace evstudy
