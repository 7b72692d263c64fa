// market_model.hpp
// Single-index market model R_i = alpha + beta * R_m + e fitted by OLS over an
// estimation window, expected returns, and the abnormal-return matrix.

#pragma once

#include "evstudy/date.hpp"
#include "evstudy/exclusion.hpp"
#include "evstudy/market_data.hpp"

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace evstudy {

inline constexpr std::size_t kMinEstimationObservations = 10;

struct EstimationWindow {
    Date anchor_event;
    int start_offset = -52;
    int end_offset = -1;

    // Throws ConfigError unless start_offset < end_offset <= -1.
    void validate() const;
};

// Two-variable least squares y = alpha + beta x, computed from centred
// moments. beta uses the population divisor for both moments (the ratio does
// not depend on it).
struct OlsResult {
    double alpha = 0.0;
    double beta = 0.0;
    double ssr = 0.0;  // sum of squared residuals
    double sst = 0.0;  // total sum of squares of y about its mean
    std::size_t n = 0;
};

// Throws NumericalError for n < 2, mismatched sizes, or zero variance in x.
OlsResult ols(std::span<const double> x, std::span<const double> y);

struct MarketModelFit {
    std::string ticker;
    double alpha = 0.0;
    double beta = 0.0;
    double residual_variance = 0.0;  // SSR / (n_obs - 2)
    double r_squared = 0.0;
    std::size_t n_obs = 0;
};

// Paired (market, security) returns inside the window, in calendar order.
struct PairedReturns {
    std::vector<std::size_t> slots;
    std::vector<double> market;
    std::vector<double> security;
};

PairedReturns paired_returns(const ReturnSeries& security, const ReturnSeries& market,
                             std::size_t first_slot, std::size_t last_slot);

// Throws NumericalError with fewer than kMinEstimationObservations pairs or
// zero market variance; DataError if the window leaves the calendar.
MarketModelFit fit_market_model(const ReturnSeries& security, const ReturnSeries& market,
                                const TradingCalendar& calendar, const EstimationWindow& window);

inline double expected_return(const MarketModelFit& fit, double market_return) {
    return fit.alpha + fit.beta * market_return;
}

// Abnormal returns over the estimation window (the regression residuals).
std::vector<double> estimation_abnormal_returns(const MarketModelFit& fit, const ReturnSeries& security,
                                                const ReturnSeries& market,
                                                const TradingCalendar& calendar,
                                                const EstimationWindow& window);

struct FitBatch {
    std::vector<MarketModelFit> fits;  // same order as the requested tickers, minus exclusions
    ExclusionList excluded;
};

// Fits every requested ticker. Securities whose fit is degenerate are dropped
// and reported instead of aborting the batch. Output is identical for both
// execution modes.
FitBatch fit_market_models(const std::vector<ReturnSeries>& returns, const ReturnSeries& market,
                           const TradingCalendar& calendar, const EstimationWindow& window,
                           const std::vector<std::string>& tickers, Exec exec = Exec::parallel);

// security x relative-day grid; a cell is present iff the security and the
// market both have a return that day.
class AbnormalReturnMatrix {
public:
    AbnormalReturnMatrix() = default;
    AbnormalReturnMatrix(Date event_date, int first_day, int last_day, std::vector<std::string> tickers);

    Date event_date() const { return event_date_; }
    int first_day() const { return first_day_; }
    int last_day() const { return last_day_; }
    std::size_t n_days() const { return static_cast<std::size_t>(last_day_ - first_day_ + 1); }
    std::size_t n_securities() const { return tickers_.size(); }
    const std::vector<std::string>& tickers() const { return tickers_; }
    std::optional<std::size_t> row_of(std::string_view ticker) const;

    bool covers(int day) const { return day >= first_day_ && day <= last_day_; }
    // Throws std::out_of_range for days outside [first_day, last_day].
    std::optional<double> at(std::size_t row, int day) const;
    void set(std::size_t row, int day, std::optional<double> value);

private:
    std::size_t index(std::size_t row, int day) const;

    Date event_date_;
    int first_day_ = 0;
    int last_day_ = -1;
    std::vector<std::string> tickers_;
    std::vector<std::optional<double>> cells_;
};

// AR = actual log return - (alpha + beta * market return) for each fitted
// security over relative days [first_day, last_day] around `event_date`.
// Throws DataError when the range leaves the calendar.
AbnormalReturnMatrix abnormal_returns(const PricePanel& panel, const ReturnSeries& market,
                                      std::span<const MarketModelFit> fits, Date event_date,
                                      int first_day, int last_day);

// CSV: ticker,alpha,beta,residual_variance,r_squared,n_obs
void write_fits_csv(std::ostream& out, std::span<const MarketModelFit> fits);

}  // namespace evstudy
