// event_study.hpp
// Event windows, sample categories, CAR / CAAR aggregation and the per-day
// CAAR series reported for the pre- and post-announcement windows.

#pragma once

#include "evstudy/date.hpp"
#include "evstudy/exclusion.hpp"
#include "evstudy/features.hpp"
#include "evstudy/market_model.hpp"

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace evstudy {

struct DayRange {
    int start = 0;
    int end = 0;
};

struct EventSpec {
    std::string name;
    Date event_date;
    DayRange pre_window{-5, -1};
    DayRange post_window{0, 20};
    FeatureWindow feature_window;

    // Throws ConfigError unless pre.start <= pre.end <= -1 and
    // post.start == 0 <= post.end.
    void validate() const;
    // Smallest / largest relative day any computation of this event touches.
    int first_day() const;
    int last_day() const;
};

enum class CategoryKind { all, clustered_4var, clustered_5var, custom };
std::string_view to_string(CategoryKind kind);

struct SampleCategory {
    std::string name;
    CategoryKind kind = CategoryKind::all;
    std::vector<std::string> tickers;

    // Throws ConfigError if empty, not a subset of `universe`, or (for
    // clustered kinds) missing the focal security.
    void validate(std::span<const std::string> universe, std::string_view focal) const;
};

// Sum of ARs over [t1, t2]; nullopt if any cell in the range is missing.
std::optional<double> car(const AbnormalReturnMatrix& ars, std::size_t row, int t1, int t2);

struct CaarResult {
    double caar = 0.0;
    std::vector<std::string> tickers;  // contributing securities
    std::vector<double> cars;          // their CARs, same order
    ExclusionList excluded;

    std::size_t n() const { return cars.size(); }
};

// Cross-sectional mean of CAR(t1, t2) over the category. Securities with a
// missing cell are dropped and reported. Throws NumericalError when fewer
// than `min_securities` contribute.
CaarResult caar(const AbnormalReturnMatrix& ars, const SampleCategory& category, int t1, int t2,
                std::size_t min_securities = 2);

// Same quantity summed the other way round: sum over days of the daily
// cross-sectional mean AR. Only meaningful when no cells are missing.
double caar_from_daily_means(const AbnormalReturnMatrix& ars, const SampleCategory& category, int t1, int t2);

struct CaarPoint {
    int day = 0;
    double caar = 0.0;
    std::vector<double> cars;  // contributing CARs for the test statistics

    std::size_t n() const { return cars.size(); }
};

// Pre-window rows either accumulate from the window start (default) or show
// the single-day cross-sectional mean AR.
enum class PreWindowMode { accumulated, per_day };

struct EventCaar {
    std::vector<CaarPoint> pre;   // accumulated from pre_window.start
    std::vector<CaarPoint> post;  // accumulated from day 0
    ExclusionList excluded;       // one entry per dropped security
};

// A category of one security is allowed here; the series is then that
// security's CAR path.
EventCaar caar_series(const AbnormalReturnMatrix& ars, const SampleCategory& category, const EventSpec& event,
                      PreWindowMode mode = PreWindowMode::accumulated);

// CSV: event,category,relative_day,caar,n_securities
void write_caar_csv_header(std::ostream& out);
void write_caar_csv_rows(std::ostream& out, std::string_view event, std::string_view category,
                         const EventCaar& series);
// CSV: relative_day,caar (pre rows then post rows)
void write_caar_plot(std::ostream& out, const EventCaar& series);

}  // namespace evstudy
