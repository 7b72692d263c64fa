#include "evstudy/features.hpp"

#include "evstudy/errors.hpp"
#include "evstudy/log.hpp"
#include "evstudy/text.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <variant>

namespace evstudy {

std::string_view to_string(WindowSide side) { return side == WindowSide::before ? "before" : "after"; }

std::string_view to_string(FeatureMode mode) {
    return mode == FeatureMode::four_variable ? "four_variable" : "five_variable";
}

void FeatureWindow::validate() const {
    if (length < 2) throw ConfigError("feature window length must be >= 2, got " + std::to_string(length));
}

std::size_t feature_count(FeatureMode mode) { return mode == FeatureMode::four_variable ? 4 : 5; }

std::vector<double> FeatureVector::values(FeatureMode mode) const {
    std::vector<double> v = {spread, volatility, vw_return, capm_beta};
    if (mode == FeatureMode::five_variable) v.push_back(pre_car.value_or(0.0));
    return v;
}

double daily_spread(std::span<const Bar> bars) {
    if (bars.empty()) throw NumericalError("daily_spread: empty window");
    double sum = 0.0;
    for (const auto& b : bars) sum += b.high - b.low;
    return sum / static_cast<double>(bars.size());
}

double realized_volatility(std::span<const double> returns) {
    if (returns.empty()) throw NumericalError("realized_volatility: empty window");
    double sum = 0.0;
    for (double r : returns) sum += r * r;
    return sum;
}

double volume_weighted_return(std::span<const double> closes, std::span<const double> volumes) {
    if (closes.size() != volumes.size() + 1 || volumes.empty()) {
        throw NumericalError("volume_weighted_return: need one more close than volumes");
    }
    double total = 0.0;
    for (double v : volumes) total += v;
    if (!(total > 0.0)) throw NumericalError("volume_weighted_return: zero total volume");
    double sum = 0.0;
    for (std::size_t t = 0; t < volumes.size(); ++t) {
        sum += (volumes[t] / total) * std::log(closes[t + 1] / closes[t]);
    }
    return sum * 100.0;
}

CapmFit capm_beta(std::span<const double> security_returns, std::span<const FactorRow> factors) {
    if (security_returns.size() != factors.size()) {
        throw NumericalError("capm_beta: returns and factors differ in length");
    }
    if (security_returns.size() < kMinEstimationObservations) {
        throw NumericalError("capm_beta: only " + std::to_string(security_returns.size()) +
                             " excess-return pairs (need " + std::to_string(kMinEstimationObservations) + ")");
    }
    std::vector<double> x(factors.size()), y(factors.size());
    for (std::size_t i = 0; i < factors.size(); ++i) {
        x[i] = factors[i].mkt_rf;
        y[i] = security_returns[i] - factors[i].rf;
    }
    OlsResult r;
    try {
        r = ols(x, y);
    } catch (const NumericalError&) {
        throw NumericalError("capm_beta: zero excess-market variance");
    }
    return {r.alpha, r.beta, r.n};
}

std::optional<double> pre_event_car(const AbnormalReturnMatrix& ars, std::size_t row,
                                    const FeatureWindow& window, std::size_t* days_used) {
    double sum = 0.0;
    std::size_t used = 0;
    for (int day = window.first_day(); day <= window.last_day(); ++day) {
        if (!ars.covers(day)) continue;
        const auto ar = ars.at(row, day);
        if (!ar) return std::nullopt;
        sum += *ar;
        ++used;
    }
    if (days_used) *days_used = used;
    return sum;
}

std::vector<std::string> FeatureMatrix::tickers() const {
    std::vector<std::string> out;
    out.reserve(raw.size());
    for (const auto& v : raw) out.push_back(v.ticker);
    return out;
}

void normalize_columns(std::span<double> values, std::size_t dim, std::vector<double>& means,
                       std::vector<bool>& guarded) {
    const std::size_t n = dim == 0 ? 0 : values.size() / dim;
    means.assign(dim, 0.0);
    guarded.assign(dim, false);
    if (n == 0) return;
    for (std::size_t c = 0; c < dim; ++c) {
        double sum = 0.0, sum_abs = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            sum += values[i * dim + c];
            sum_abs += std::abs(values[i * dim + c]);
        }
        const double mean = sum / static_cast<double>(n);
        const double mean_abs = sum_abs / static_cast<double>(n);
        means[c] = mean;
        if (std::abs(mean) <= 1e-9 * mean_abs || mean == 0.0) {
            guarded[c] = true;
            continue;
        }
        for (std::size_t i = 0; i < n; ++i) values[i * dim + c] /= mean;
    }
}

namespace {

using Outcome = std::variant<FeatureVector, Exclusion>;

struct WindowSlots {
    std::size_t first = 0;
    std::size_t last = 0;
};

Outcome compute_one(const PricePanel& panel, const FactorSeries& factors, const AbnormalReturnMatrix& ars,
                    const FeatureWindow& window, FeatureMode mode, const WindowSlots& slots,
                    const std::string& ticker) {
    const SecuritySeries* series = panel.find(ticker);
    if (!series) return Exclusion{ticker, "not_in_panel", "ticker absent from price panel"};

    std::vector<Bar> bars;
    std::vector<double> closes{}, volumes, returns;
    std::vector<FactorRow> factor_rows;
    const auto& prev = series->bars[slots.first - 1];
    if (!prev) return Exclusion{ticker, "missing_price", "no close before feature window"};
    closes.push_back(prev->close);
    for (std::size_t s = slots.first; s <= slots.last; ++s) {
        if (!series->bars[s]) {
            return Exclusion{ticker, "missing_price", "no bar on " + panel.calendar[s].iso()};
        }
        if (!factors.rows[s]) {
            return Exclusion{ticker, "missing_factor", "no factor row on " + panel.calendar[s].iso()};
        }
        const Bar& b = *series->bars[s];
        bars.push_back(b);
        returns.push_back(std::log(b.close / closes.back()));
        closes.push_back(b.close);
        volumes.push_back(b.volume);
        factor_rows.push_back(*factors.rows[s]);
    }

    FeatureVector v;
    v.ticker = ticker;
    try {
        v.spread = daily_spread(bars);
        v.volatility = realized_volatility(returns);
        v.vw_return = volume_weighted_return(closes, volumes);
        v.capm_beta = capm_beta(returns, factor_rows).beta;
    } catch (const NumericalError& e) {
        return Exclusion{ticker, "degenerate_feature", e.what()};
    }

    if (mode == FeatureMode::five_variable) {
        const auto row = ars.row_of(ticker);
        if (!row) return Exclusion{ticker, "no_market_model_fit", "no abnormal returns for feature window"};
        v.pre_car = pre_event_car(ars, *row, window);
        if (!v.pre_car) return Exclusion{ticker, "missing_ar", "abnormal return missing in feature window"};
    }
    return v;
}

}  // namespace

FeatureMatrix build_feature_matrix(const PricePanel& panel, const FactorSeries& factors,
                                   const AbnormalReturnMatrix& ars, const FeatureWindow& window,
                                   FeatureMode mode, const std::vector<std::string>& universe,
                                   Exec exec) {
    window.validate();
    if (factors.rows.size() != panel.calendar.size()) {
        throw DataError("factor series is not aligned with the price calendar");
    }
    WindowSlots slots;
    slots.first = relative_position(panel.calendar, window.anchor_event, window.first_day());
    slots.last = relative_position(panel.calendar, window.anchor_event, window.last_day());
    if (slots.first == 0) {
        throw DataError("feature window starting " + panel.calendar[0].iso() +
                        " has no prior close for its first return");
    }

    std::vector<Outcome> outcomes(universe.size());
    const auto n = static_cast<long long>(universe.size());
    auto run = [&](long long i) {
        const auto k = static_cast<std::size_t>(i);
        outcomes[k] = compute_one(panel, factors, ars, window, mode, slots, universe[k]);
    };
    if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
        for (long long i = 0; i < n; ++i) run(i);
    } else {
        for (long long i = 0; i < n; ++i) run(i);
    }

    FeatureMatrix m;
    m.mode = mode;
    m.window = window;
    for (auto& o : outcomes) {
        if (auto* v = std::get_if<FeatureVector>(&o)) {
            m.raw.push_back(std::move(*v));
        } else {
            m.excluded.push_back(std::get<Exclusion>(std::move(o)));
        }
    }
    std::sort(m.raw.begin(), m.raw.end(),
              [](const FeatureVector& a, const FeatureVector& b) { return a.ticker < b.ticker; });

    if (mode == FeatureMode::five_variable) {
        for (int day = window.first_day(); day <= window.last_day(); ++day) {
            if (ars.covers(day)) ++m.pre_car_days;
        }
    }

    const std::size_t dim = m.dim();
    m.normalized.reserve(m.raw.size() * dim);
    for (const auto& v : m.raw) {
        const auto vals = v.values(mode);
        m.normalized.insert(m.normalized.end(), vals.begin(), vals.end());
    }
    normalize_columns(m.normalized, dim, m.column_means, m.column_guarded);
    for (std::size_t c = 0; c < dim; ++c) {
        if (m.column_guarded[c]) {
            std::string msg = "feature '" + std::string(kFeatureNames[c]) +
                              "' has near-zero cross-sectional mean; left unscaled";
            log::warn(msg);
            m.warnings.push_back(std::move(msg));
        }
    }
    return m;
}

void write_features_csv(std::ostream& out, const FeatureMatrix& m) {
    out << "ticker";
    for (auto name : kFeatureNames) out << ',' << name;
    for (auto name : kFeatureNames) out << ",norm_" << name;
    out << '\n';
    const std::size_t dim = m.dim();
    for (std::size_t i = 0; i < m.raw.size(); ++i) {
        const auto& v = m.raw[i];
        out << v.ticker << ',' << text::shortest(v.spread) << ',' << text::shortest(v.volatility) << ','
            << text::shortest(v.vw_return) << ',' << text::shortest(v.capm_beta) << ','
            << (v.pre_car ? text::shortest(*v.pre_car) : "");
        const auto row = m.normalized_row(i);
        for (std::size_t c = 0; c < kFeatureNames.size(); ++c) {
            out << ',';
            if (c < dim) out << text::shortest(row[c]);
        }
        out << '\n';
    }
}

}  // namespace evstudy
