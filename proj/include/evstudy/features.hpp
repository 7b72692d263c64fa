// features.hpp
// Per-security clustering variables over a feature window:
//   spread      mean daily high-low range (price units)
//   volatility  sum of squared daily log returns
//   vw_return   volume-weighted log return, in percent
//   capm_beta   OLS slope of excess security return on excess market return
//   pre_car     cumulative abnormal return over the window (five-variable mode)
// and their cross-sectional X / mean(X) normalisation.

#pragma once

#include "evstudy/date.hpp"
#include "evstudy/exclusion.hpp"
#include "evstudy/market_data.hpp"
#include "evstudy/market_model.hpp"

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace evstudy {

enum class WindowSide { before, after };
enum class FeatureMode { four_variable, five_variable };

std::string_view to_string(WindowSide side);
std::string_view to_string(FeatureMode mode);

struct FeatureWindow {
    Date anchor_event;
    int length = 20;
    WindowSide side = WindowSide::before;

    // Throws ConfigError when length < 2.
    void validate() const;
    // `before`: [-length, -1]; `after`: [+1, +length].
    int first_day() const { return side == WindowSide::before ? -length : 1; }
    int last_day() const { return side == WindowSide::before ? -1 : length; }
};

struct FeatureVector {
    std::string ticker;
    double spread = 0.0;
    double volatility = 0.0;
    double vw_return = 0.0;
    double capm_beta = 0.0;
    std::optional<double> pre_car;

    // Feature values in column order for `mode`.
    std::vector<double> values(FeatureMode mode) const;
};

inline constexpr std::array<std::string_view, 5> kFeatureNames = {"spread", "volatility", "vw_return",
                                                                  "capm_beta", "pre_car"};
std::size_t feature_count(FeatureMode mode);

// Mean of (high - low). Throws NumericalError on an empty window.
double daily_spread(std::span<const Bar> bars);

// Sum of squared returns. Throws NumericalError on an empty window.
double realized_volatility(std::span<const double> returns);

// sum_t (v_t / V) * ln(P_t / P_{t-1}) * 100 with V the total window volume.
// `closes` holds the close before the window followed by one close per window
// day; `volumes` holds one volume per window day. Throws NumericalError when
// V is zero.
double volume_weighted_return(std::span<const double> closes, std::span<const double> volumes);

struct CapmFit {
    double alpha = 0.0;
    double beta = 0.0;
    std::size_t n = 0;
};

// OLS of (R_i - rf) on mkt_rf. Needs kMinEstimationObservations pairs.
CapmFit capm_beta(std::span<const double> security_returns, std::span<const FactorRow> factors);

// Sum of ARs over the window days covered by the matrix; nullopt if any
// covered cell is missing. `days_used` receives the number of days summed.
std::optional<double> pre_event_car(const AbnormalReturnMatrix& ars, std::size_t row,
                                    const FeatureWindow& window, std::size_t* days_used = nullptr);

class FeatureMatrix {
public:
    FeatureMode mode = FeatureMode::five_variable;
    FeatureWindow window;
    std::vector<FeatureVector> raw;   // one per included security, ticker order
    std::vector<double> normalized;   // row-major raw.size() x dim()
    std::vector<double> column_means;
    std::vector<bool> column_guarded;  // true: column left unscaled
    ExclusionList excluded;
    std::vector<std::string> warnings;
    std::size_t pre_car_days = 0;

    std::size_t size() const { return raw.size(); }
    std::size_t dim() const { return feature_count(mode); }
    std::vector<std::string> tickers() const;
    std::span<const double> normalized_row(std::size_t i) const {
        return {normalized.data() + i * dim(), dim()};
    }
};

// Divides every column by its cross-sectional mean unless
// |mean| < 1e-9 * mean(|x|), in which case the column is left as is and
// `guarded[c]` is set. `values` is row-major n x dim.
void normalize_columns(std::span<double> values, std::size_t dim, std::vector<double>& means,
                       std::vector<bool>& guarded);

// Securities with a gap anywhere in the window (prices, factors, or ARs in
// five-variable mode) or a degenerate feature are excluded and reported.
FeatureMatrix build_feature_matrix(const PricePanel& panel, const FactorSeries& factors,
                                   const AbnormalReturnMatrix& ars, const FeatureWindow& window,
                                   FeatureMode mode, const std::vector<std::string>& universe,
                                   Exec exec = Exec::parallel);

// CSV: ticker,<raw features>,<norm_ features>
void write_features_csv(std::ostream& out, const FeatureMatrix& m);

}  // namespace evstudy
