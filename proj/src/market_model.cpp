#include "evstudy/market_model.hpp"

#include "evstudy/errors.hpp"
#include "evstudy/text.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <unordered_map>
#include <variant>

namespace evstudy {

void EstimationWindow::validate() const {
    if (!(start_offset < end_offset) || end_offset > -1) {
        throw ConfigError("estimation window must satisfy start < end <= -1 (got " +
                          std::to_string(start_offset) + ", " + std::to_string(end_offset) + ")");
    }
}

OlsResult ols(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw NumericalError("ols: x and y differ in length");
    const std::size_t n = x.size();
    if (n < 2) throw NumericalError("ols: need at least 2 observations");

    double sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / static_cast<double>(n);
    const double my = sy / static_cast<double>(n);

    double sxx = 0.0, sxy = 0.0, syy = 0.0, raw = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        raw += x[i] * x[i];
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    // A constant regressor leaves rounding-level spread; treat that as zero.
    if (!(sxx > 1e-24 * raw)) throw NumericalError("ols: zero variance in regressor");

    OlsResult r;
    r.n = n;
    r.beta = (sxy / static_cast<double>(n)) / (sxx / static_cast<double>(n));
    r.alpha = my - r.beta * mx;
    r.sst = syy;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = y[i] - r.alpha - r.beta * x[i];
        r.ssr += e * e;
    }
    return r;
}

PairedReturns paired_returns(const ReturnSeries& security, const ReturnSeries& market,
                             std::size_t first_slot, std::size_t last_slot) {
    PairedReturns p;
    const std::size_t end = std::min({last_slot + 1, security.values.size(), market.values.size()});
    for (std::size_t i = first_slot; i < end; ++i) {
        if (security.values[i] && market.values[i]) {
            p.slots.push_back(i);
            p.market.push_back(*market.values[i]);
            p.security.push_back(*security.values[i]);
        }
    }
    return p;
}

namespace {

PairedReturns window_pairs(const ReturnSeries& security, const ReturnSeries& market,
                           const TradingCalendar& calendar, const EstimationWindow& window) {
    window.validate();
    const auto first = relative_position(calendar, window.anchor_event, window.start_offset);
    const auto last = relative_position(calendar, window.anchor_event, window.end_offset);
    return paired_returns(security, market, first, last);
}

}  // namespace

MarketModelFit fit_market_model(const ReturnSeries& security, const ReturnSeries& market,
                                const TradingCalendar& calendar, const EstimationWindow& window) {
    const PairedReturns p = window_pairs(security, market, calendar, window);
    if (p.slots.size() < kMinEstimationObservations) {
        throw NumericalError(security.ticker + ": only " + std::to_string(p.slots.size()) +
                             " paired estimation-window returns (need " +
                             std::to_string(kMinEstimationObservations) + ")");
    }
    OlsResult r;
    try {
        r = ols(p.market, p.security);
    } catch (const NumericalError& e) {
        throw NumericalError(security.ticker + ": " + e.what());
    }
    MarketModelFit fit;
    fit.ticker = security.ticker;
    fit.alpha = r.alpha;
    fit.beta = r.beta;
    fit.n_obs = r.n;
    fit.residual_variance = r.ssr / static_cast<double>(r.n - 2);
    // A constant security series has nothing to explain; report 0.
    fit.r_squared = r.sst > 0.0 ? std::clamp(1.0 - r.ssr / r.sst, 0.0, 1.0) : 0.0;
    return fit;
}

std::vector<double> estimation_abnormal_returns(const MarketModelFit& fit, const ReturnSeries& security,
                                                const ReturnSeries& market,
                                                const TradingCalendar& calendar,
                                                const EstimationWindow& window) {
    const PairedReturns p = window_pairs(security, market, calendar, window);
    std::vector<double> ars(p.slots.size());
    for (std::size_t i = 0; i < ars.size(); ++i) {
        ars[i] = p.security[i] - expected_return(fit, p.market[i]);
    }
    return ars;
}

FitBatch fit_market_models(const std::vector<ReturnSeries>& returns, const ReturnSeries& market,
                           const TradingCalendar& calendar, const EstimationWindow& window,
                           const std::vector<std::string>& tickers, Exec exec) {
    window.validate();
    std::unordered_map<std::string_view, const ReturnSeries*> by_ticker;
    for (const auto& r : returns) by_ticker.emplace(r.ticker, &r);
    for (const auto& t : tickers) {
        if (!by_ticker.count(t)) throw DataError("no return series for '" + t + "'");
    }
    // Fail fast on a window that does not fit the calendar.
    (void)relative_position(calendar, window.anchor_event, window.start_offset);

    using Outcome = std::variant<MarketModelFit, Exclusion>;
    std::vector<Outcome> outcomes(tickers.size());
    const auto n = static_cast<long long>(tickers.size());

    auto fit_one = [&](long long i) {
        const auto& t = tickers[static_cast<std::size_t>(i)];
        try {
            outcomes[static_cast<std::size_t>(i)] =
                fit_market_model(*by_ticker.at(t), market, calendar, window);
        } catch (const NumericalError& e) {
            outcomes[static_cast<std::size_t>(i)] = Exclusion{t, "degenerate_estimation_window", e.what()};
        }
    };

    if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
        for (long long i = 0; i < n; ++i) fit_one(i);
    } else {
        for (long long i = 0; i < n; ++i) fit_one(i);
    }

    FitBatch batch;
    for (auto& o : outcomes) {
        if (auto* f = std::get_if<MarketModelFit>(&o)) {
            batch.fits.push_back(std::move(*f));
        } else {
            batch.excluded.push_back(std::get<Exclusion>(std::move(o)));
        }
    }
    return batch;
}

// ---------------------------------------------------------------------------
// AbnormalReturnMatrix

AbnormalReturnMatrix::AbnormalReturnMatrix(Date event_date, int first_day, int last_day,
                                           std::vector<std::string> tickers)
    : event_date_(event_date), first_day_(first_day), last_day_(last_day), tickers_(std::move(tickers)) {
    if (last_day < first_day) throw std::invalid_argument("AbnormalReturnMatrix: empty day range");
    cells_.assign(tickers_.size() * n_days(), std::nullopt);
}

std::optional<std::size_t> AbnormalReturnMatrix::row_of(std::string_view ticker) const {
    auto it = std::find(tickers_.begin(), tickers_.end(), ticker);
    if (it == tickers_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - tickers_.begin());
}

std::size_t AbnormalReturnMatrix::index(std::size_t row, int day) const {
    if (row >= tickers_.size() || !covers(day)) {
        throw std::out_of_range("AbnormalReturnMatrix: day " + std::to_string(day) + " outside [" +
                                std::to_string(first_day_) + ", " + std::to_string(last_day_) + "]");
    }
    return row * n_days() + static_cast<std::size_t>(day - first_day_);
}

std::optional<double> AbnormalReturnMatrix::at(std::size_t row, int day) const {
    return cells_[index(row, day)];
}

void AbnormalReturnMatrix::set(std::size_t row, int day, std::optional<double> value) {
    cells_[index(row, day)] = value;
}

AbnormalReturnMatrix abnormal_returns(const PricePanel& panel, const ReturnSeries& market,
                                      std::span<const MarketModelFit> fits, Date event_date,
                                      int first_day, int last_day) {
    const auto first_slot = relative_position(panel.calendar, event_date, first_day);
    (void)relative_position(panel.calendar, event_date, last_day);

    std::vector<std::string> tickers;
    tickers.reserve(fits.size());
    for (const auto& f : fits) tickers.push_back(f.ticker);
    AbnormalReturnMatrix m(event_date, first_day, last_day, std::move(tickers));

    for (std::size_t row = 0; row < fits.size(); ++row) {
        const ReturnSeries r = log_returns(panel.at(fits[row].ticker));
        for (int day = first_day; day <= last_day; ++day) {
            const auto slot = first_slot + static_cast<std::size_t>(day - first_day);
            if (r.values[slot] && market.values[slot]) {
                m.set(row, day, *r.values[slot] - expected_return(fits[row], *market.values[slot]));
            }
        }
    }
    return m;
}

void write_fits_csv(std::ostream& out, std::span<const MarketModelFit> fits) {
    out << "ticker,alpha,beta,residual_variance,r_squared,n_obs\n";
    for (const auto& f : fits) {
        out << f.ticker << ',' << text::shortest(f.alpha) << ',' << text::shortest(f.beta) << ','
            << text::shortest(f.residual_variance) << ',' << text::shortest(f.r_squared) << ','
            << f.n_obs << '\n';
    }
}

}  // namespace evstudy
