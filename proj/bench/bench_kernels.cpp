// Serial reference path vs OpenMP path for the parallel kernels.
// Arg 0 of every benchmark: 0 = serial, 1 = parallel.

#include "evstudy/clustering.hpp"
#include "evstudy/features.hpp"
#include "evstudy/log.hpp"
#include "evstudy/market_model.hpp"

#include <benchmark/benchmark.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

using namespace evstudy;

namespace {

Exec exec_of(const benchmark::State& st) { return st.range(0) ? Exec::parallel : Exec::serial; }

struct Market {
    PricePanel panel;
    FactorSeries factors;
    std::vector<ReturnSeries> returns;
    ReturnSeries index;
    std::vector<std::string> tickers;
    Date event;
};

// `n` securities plus an index over 260 weekdays; the event sits on day 200.
Market make_market(std::size_t n) {
    std::mt19937_64 rng(42);
    std::normal_distribution<double> z(0.0, 0.012);
    std::uniform_real_distribution<double> u(0.5, 1.5);
    std::vector<Date> dates;
    for (Date d = Date::parse_iso("2017-01-02"); dates.size() < 260; d = Date(d.days() + 1)) {
        if (!d.is_weekend()) dates.push_back(d);
    }
    std::vector<double> m(dates.size());
    for (auto& x : m) x = z(rng);

    Market mk;
    mk.panel.calendar = TradingCalendar(dates);
    mk.panel.calendar_source = "IDX";
    auto add = [&](const std::string& ticker, double beta, double p0) {
        SecuritySeries s;
        s.ticker = ticker;
        double c = p0;
        for (std::size_t t = 0; t < dates.size(); ++t) {
            if (t > 0) c *= std::exp(beta * m[t] + (ticker == "IDX" ? 0.0 : z(rng)));
            const double r = c * 0.01 * u(rng);
            s.bars.push_back(Bar{c, c + r, c - r, c, std::round(1e6 * u(rng))});
        }
        mk.panel.securities.push_back(std::move(s));
    };
    add("IDX", 1.0, 5000.0);
    for (std::size_t i = 0; i < n; ++i) {
        mk.tickers.push_back("S" + std::to_string(10000 + i));
        add(mk.tickers.back(), u(rng), 20.0 + 100.0 * u(rng));
    }
    for (std::size_t t = 0; t < dates.size(); ++t) mk.factors.rows.push_back(FactorRow{m[t] - 0.0001, 0.0001});
    mk.returns = log_returns(mk.panel);
    mk.index = mk.returns.front();
    mk.event = dates[200];
    return mk;
}

PointSet random_points(std::size_t n, std::size_t dim) {
    std::mt19937_64 rng(7);
    std::lognormal_distribution<double> ln(0.0, 0.5);
    PointSet p;
    p.n = n;
    p.dim = dim;
    p.values.resize(n * dim);
    for (auto& x : p.values) x = ln(rng);
    return p;
}

void BM_PairwiseDistances(benchmark::State& st) {
    const auto p = random_points(static_cast<std::size_t>(st.range(1)), 5);
    const DistanceMetric metric{MetricKind::euclidean};
    for (auto _ : st) benchmark::DoNotOptimize(pairwise_distances(p, metric, exec_of(st)));
}

void BM_Agglomerate(benchmark::State& st) {
    const auto n = static_cast<std::size_t>(st.range(1));
    const auto p = random_points(n, 5);
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < n; ++i) labels.push_back("T" + std::to_string(i));
    for (auto _ : st) {
        benchmark::DoNotOptimize(
            agglomerate(p, labels, {MetricKind::squared_euclidean}, Linkage::average, exec_of(st)));
    }
}

void BM_FitMarketModels(benchmark::State& st) {
    const auto mk = make_market(static_cast<std::size_t>(st.range(1)));
    const EstimationWindow w{mk.event, -150, -1};
    for (auto _ : st) {
        benchmark::DoNotOptimize(fit_market_models(mk.returns, mk.index, mk.panel.calendar, w, mk.tickers, exec_of(st)));
    }
}

void BM_BuildFeatureMatrix(benchmark::State& st) {
    const auto mk = make_market(static_cast<std::size_t>(st.range(1)));
    const auto fits = fit_market_models(mk.returns, mk.index, mk.panel.calendar, {mk.event, -150, -41}, mk.tickers);
    const auto ars = abnormal_returns(mk.panel, mk.index, fits.fits, mk.event, -40, 0);
    const FeatureWindow fw{mk.event, 40, WindowSide::before};
    for (auto _ : st) {
        benchmark::DoNotOptimize(build_feature_matrix(mk.panel, mk.factors, ars, fw, FeatureMode::five_variable,
                                                      mk.tickers, exec_of(st)));
    }
}

const int kQuiet = [] {
    log::set_level(log::Level::error);
    return 0;
}();

}  // namespace

BENCHMARK(BM_PairwiseDistances)->ArgsProduct({{0, 1}, {200, 1000}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Agglomerate)->ArgsProduct({{0, 1}, {100, 400}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FitMarketModels)->ArgsProduct({{0, 1}, {100, 1000}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BuildFeatureMatrix)->ArgsProduct({{0, 1}, {100, 1000}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
