// make_sample_data: writes the bundled 2018 sample (prices.csv, factors.csv).
//
// The series are synthetic. Starting levels and average volumes are rough
// 2017-12-29 values for the 37 tech names and the NDX index. Returns follow a
// single-index model whose estimation-window residuals are orthogonalised
// against [1, r_m], so an OLS fit recovers the generating alpha and beta.
// Abnormal returns inside the published event windows are planted so the
// all-sample cross-sections reproduce the reported CAAR and t values, and the
// focal security carries its reported abnormal returns around event 4.
//
//   make_sample_data [out_dir]   (default data/sample2018)

#include "evstudy/market_data.hpp"
#include "evstudy/text.hpp"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace {

using namespace evstudy;

struct Ticker {
    const char* symbol;
    double close0;
    double volume;  // average shares per day
};

const Ticker kTickers[] = {
    {"AAPL", 169.23, 30e6}, {"ADBE", 175.24, 2.5e6}, {"ADI", 89.03, 2.5e6},   {"ADSK", 104.83, 2.0e6},
    {"AMAT", 51.12, 10e6},  {"AMD", 10.28, 60e6},    {"AVGO", 256.90, 2.5e6}, {"CDNS", 41.82, 2.0e6},
    {"CERN", 67.39, 1.8e6}, {"CHKP", 103.62, 1.0e6}, {"CSCO", 38.30, 22e6},   {"CTSH", 71.02, 3.5e6},
    {"CTXS", 88.00, 1.5e6}, {"FB", 176.46, 20e6},    {"GOOG", 1046.40, 1.6e6}, {"GOOGL", 1053.40, 1.8e6},
    {"INTC", 46.16, 25e6},  {"INTU", 157.78, 1.5e6}, {"KLAC", 105.07, 1.5e6}, {"LRCX", 184.07, 3.0e6},
    {"MCHP", 87.88, 2.0e6}, {"MSFT", 85.54, 28e6},   {"MU", 41.12, 35e6},     {"MXIM", 52.28, 2.5e6},
    {"NTAP", 55.32, 3.0e6}, {"NVDA", 193.50, 12e6},  {"NXPI", 117.09, 3.5e6}, {"QCOM", 64.02, 12e6},
    {"SNPS", 85.24, 1.2e6}, {"STX", 41.84, 3.5e6},   {"SWKS", 94.95, 2.0e6},  {"SYMC", 28.06, 9.0e6},
    {"TXN", 104.44, 5.0e6}, {"VRSN", 114.44, 0.7e6}, {"WDAY", 101.74, 1.5e6}, {"WDC", 79.53, 3.5e6},
    {"XLNX", 67.42, 2.5e6},
};
constexpr const char* kIndex = "NDX";
constexpr double kIndexClose0 = 6396.42;
constexpr double kIndexVolume = 2.0e9;
constexpr const char* kFocal = "FB";

// Estimation-window market sd chosen so the focal security's residual scale
// matches its reported AR / t ratio.
constexpr double kEstMarketSd = 0.014435;
constexpr double kEstMarketMean = 0.0008;
constexpr int kEstStart = -52;
constexpr int kEstEnd = -1;

class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
    double uniform(double a, double b) { return a + (b - a) * uniform(); }
    // Box-Muller; std::normal_distribution is not portable across libraries.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u = 0.0;
        while (u <= 0.0) u = uniform();
        const double v = uniform();
        const double r = std::sqrt(-2.0 * std::log(u));
        spare_ = r * std::sin(2.0 * M_PI * v);
        has_spare_ = true;
        return r * std::cos(2.0 * M_PI * v);
    }
    double normal(double mean, double sd) { return mean + sd * normal(); }

private:
    std::mt19937_64 eng_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

double round_to(double v, int decimals) {
    const double f = std::pow(10.0, decimals);
    return std::round(v * f) / f;
}

TradingCalendar build_calendar() {
    const std::set<Date> holidays = {Date::from_ymd(2018, 1, 1),  Date::from_ymd(2018, 1, 15),
                                     Date::from_ymd(2018, 2, 19), Date::from_ymd(2018, 3, 30),
                                     Date::from_ymd(2018, 5, 28), Date::from_ymd(2018, 7, 4)};
    std::vector<Date> days;
    for (Date d = Date::from_ymd(2017, 12, 29); d <= Date::from_ymd(2018, 8, 31); d = Date(d.days() + 1)) {
        if (!d.is_weekend() && !holidays.count(d)) days.push_back(d);
    }
    return TradingCalendar(std::move(days));
}

// Reported all-sample (CAAR, t) per relative day, plus the focal security's
// reported ARs where they exist.
struct Block {
    Date event;
    int first = 0;
    std::vector<std::pair<double, double>> caar_t;
    std::vector<double> focal_ar;  // empty: focal security is unconstrained
};

std::vector<Block> planted_blocks() {
    const Date e1 = Date::from_ymd(2018, 3, 19), e2 = Date::from_ymd(2018, 4, 10), e3 = Date::from_ymd(2018, 4, 26),
               e4 = Date::from_ymd(2018, 7, 26);
    std::vector<Block> b;
    b.push_back({e1, 0,
                 {{0.0042, 1.9876}, {0.0040, 1.3301}, {0.0086, 2.5624}, {0.0089, 2.4194}, {0.0045, 1.0024},
                  {-0.0006, -0.0963}, {0.0007, 0.1121}, {-0.0023, -0.3662}, {-0.0034, -0.5455}, {-0.0036, -0.5778},
                  {-0.0022, -0.3329}, {-0.0048, -0.7064}, {-0.0144, -1.8650}, {-0.0150, -1.8059}, {-0.0162, -1.7738}},
                 {}});
    b.push_back({e2, 0,
                 {{0.0033, 2.0030}, {0.0053, 2.9933}, {0.0089, 3.5485}, {0.0062, 2.0061}, {0.0046, 1.3401},
                  {0.0026, 0.7246}, {-0.0050, -1.1563}, {-0.0210, -3.0449}, {-0.0160, -2.2937}, {-0.0217, -2.6567},
                  {-0.0131, -1.4225}, {-0.0168, -1.8161}},
                 {}});
    b.push_back({e3, 0,
                 {{0.0018, 0.4612},   {-0.0055, -1.0066}, {-0.0060, -1.0514}, {-0.0072, -1.0886}, {-0.0079, -1.0636},
                  {-0.0073, -0.9244}, {-0.0058, -0.6994}, {-0.0069, -0.7809}, {-0.0020, -0.2100}, {-0.0007, -0.0758},
                  {0.0015, 0.1439},   {-0.0117, -0.7806}, {-0.0051, -0.3742}, {-0.0011, -0.0847}, {0.0012, 0.0967},
                  {0.0007, 0.0562},   {-0.0011, -0.0793}, {-0.0009, -0.0624}, {0.0012, 0.0828},   {-0.0033, -0.2199},
                  {-0.0022, -0.1367}},
                 {}});
    b.push_back({e4, -5,
                 {{-0.0021, -1.1830}, {-0.0072, -2.6815}, {-0.0091, -2.3915}, {-0.0214, -3.5996}, {-0.0255, -3.3763}},
                 {0.0017, 0.0111, 0.0032, 0.0143, -0.0006}});
    b.push_back({e4, 0,
                 {{0.0197, 2.4660},   {0.0229, 2.2847},   {0.0212, 1.8476},   {0.0190, 1.6481},   {0.0139, 1.2445},
                  {0.0100, 0.8892},   {0.0082, 0.7013},   {0.0098, 0.8414},   {0.0094, 0.7984},   {0.0102, 0.8497},
                  {0.0036, 0.2858},   {-0.0029, -0.2335}, {-0.0041, -0.3048}, {-0.0086, -0.6222}, {-0.0078, -0.5302},
                  {-0.0098, -0.6585}, {-0.0122, -0.7931}, {-0.0111, -0.7098}, {-0.0051, -0.3260}, {-0.0046, -0.2886},
                  {-0.0002, -0.0112}},
                 {-0.1918, 0.0102, -0.0039, 0.0047, -0.0099, 0.0136, 0.0063, 0.0388, -0.0118, 0.0083, -0.0090,
                  -0.0047, 0.0019, 0.0008, 0.0074, -0.0284, -0.0037, -0.0046, -0.0013, 0.0036, -0.0007}});
    return b;
}

// Mean 0, sample sd 1.
void standardize(std::vector<double>& z) {
    double m = 0.0;
    for (double v : z) m += v;
    m /= static_cast<double>(z.size());
    double ss = 0.0;
    for (double& v : z) {
        v -= m;
        ss += v * v;
    }
    const double sd = std::sqrt(ss / static_cast<double>(z.size() - 1));
    for (double& v : z) v /= sd;
}

// CAR_i(k) = mu_k + a_k * z_i(k) over the free securities, with z persistent
// across days, so the full cross-section hits the reported mean and t.
void plant(const Block& block, const TradingCalendar& cal, std::size_t focal, std::vector<std::vector<double>>& ar,
           Rng& rng) {
    const std::size_t n = ar.size();
    const bool fixed = !block.focal_ar.empty();
    std::vector<std::size_t> free;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(fixed && i == focal)) free.push_back(i);
    }
    const auto nf = static_cast<double>(free.size());
    const auto N = static_cast<double>(n);
    constexpr double rho = 0.85;

    std::vector<double> z(free.size()), prev_car(n, 0.0);
    double focal_car = 0.0;
    for (std::size_t k = 0; k < block.caar_t.size(); ++k) {
        const auto [m, t] = block.caar_t[k];
        const double s = std::sqrt(N) * std::abs(m) / std::abs(t);
        double fixed_sum = 0.0, fixed_ss = 0.0;
        if (fixed) {
            focal_car += block.focal_ar[k];
            fixed_sum = focal_car;
            fixed_ss = (focal_car - m) * (focal_car - m);
        }
        const double mu = (N * m - fixed_sum) / nf;
        const double ss_free = (N - 1.0) * s * s - fixed_ss - nf * (mu - m) * (mu - m);
        if (!(ss_free > 0.0)) throw std::runtime_error("plant: infeasible cross-section");
        const double a = std::sqrt(ss_free / (nf - 1.0));

        for (auto& v : z) v = k == 0 ? rng.normal() : rho * v + std::sqrt(1.0 - rho * rho) * rng.normal();
        standardize(z);

        const std::size_t slot = relative_position(cal, block.event, block.first + static_cast<int>(k));
        for (std::size_t j = 0; j < free.size(); ++j) {
            const double car = mu + a * z[j];
            ar[free[j]][slot] = car - prev_car[free[j]];
            prev_car[free[j]] = car;
        }
        if (fixed) ar[focal][slot] = block.focal_ar[k];
    }
}

// Volume multiplier for the focal security around its news days.
double focal_volume_multiplier(const TradingCalendar& cal, std::size_t slot) {
    struct Bump {
        Date event;
        std::vector<double> mult;  // from day 0
        int pre = 0;
    };
    const std::vector<Bump> bumps = {
        {Date::from_ymd(2018, 3, 19), {4.2, 3.0, 2.4, 2.0, 1.8, 1.7, 1.5, 1.5, 1.4, 1.4, 1.4, 1.3, 1.3, 1.3, 1.3}},
        {Date::from_ymd(2018, 4, 10), {3.0, 2.0, 1.4}},
        {Date::from_ymd(2018, 4, 26), {3.5, 1.8, 1.3}},
        {Date::from_ymd(2018, 7, 26), {}},
    };
    for (const auto& b : bumps) {
        const auto day0 = cal.require_index(b.event);
        if (slot < day0) continue;
        const auto d = slot - day0;
        if (b.mult.empty()) {  // event 4: heavy selling, slow decay over 20 days
            if (d == 0) return 8.0;
            if (d == 1) return 3.5;
            if (d == 2) return 2.5;
            if (d <= 20) return 1.3 + 0.5 * static_cast<double>(20 - d) / 17.0;
        } else if (d < b.mult.size()) {
            return b.mult[d];
        }
    }
    return 1.0;
}

struct Params {
    double alpha, beta, sigma_e;
};

}  // namespace

int main(int argc, char** argv) {
    try {
        const std::filesystem::path out = argc > 1 ? argv[1] : "data/sample2018";
        std::filesystem::create_directories(out);

        Rng rng(20180319);
        const TradingCalendar cal = build_calendar();
        const std::size_t T = cal.size();
        const std::size_t n = std::size(kTickers);
        const Date e1 = Date::from_ymd(2018, 3, 19);
        const std::size_t est_first = relative_position(cal, e1, kEstStart);
        const std::size_t est_last = relative_position(cal, e1, kEstEnd);
        const auto m_est = static_cast<double>(est_last - est_first + 1);

        // Market returns; slot 0 has none.
        std::vector<double> rm(T, 0.0);
        for (std::size_t s = 1; s < T; ++s) rm[s] = rng.normal(0.0004, 0.012);
        {
            std::vector<double> w(rm.begin() + static_cast<long>(est_first), rm.begin() + static_cast<long>(est_last) + 1);
            standardize(w);
            const double pop = std::sqrt((m_est - 1.0) / m_est);  // sample sd 1 -> population sd
            for (std::size_t j = 0; j < w.size(); ++j) rm[est_first + j] = kEstMarketMean + kEstMarketSd * w[j] / pop;
        }
        double rm_mean = 0.0;
        for (std::size_t s = est_first; s <= est_last; ++s) rm_mean += rm[s];
        rm_mean /= m_est;

        std::size_t focal = 0;
        std::vector<Params> params(n);
        std::vector<std::vector<double>> ar(n, std::vector<double>(T, 0.0));
        for (std::size_t i = 0; i < n; ++i) {
            double alpha, beta, r2;
            if (std::string(kTickers[i].symbol) == kFocal) {
                focal = i;
                alpha = -0.001;
                beta = 1.022;
                r2 = 0.498;
            } else {
                beta = rng.uniform(0.7, 1.5);
                r2 = rng.uniform(0.25, 0.65);
                alpha = rng.normal(0.0, 0.0008);
            }
            const double var_e = beta * beta * kEstMarketSd * kEstMarketSd * (1.0 - r2) / r2;
            params[i] = {alpha, beta, std::sqrt(var_e)};
            for (std::size_t s = 1; s < T; ++s) ar[i][s] = rng.normal(0.0, params[i].sigma_e);

            // Residuals orthogonal to [1, r_m] with population variance var_e.
            double em = 0.0;
            for (std::size_t s = est_first; s <= est_last; ++s) em += ar[i][s];
            em /= m_est;
            double sxy = 0.0, sxx = 0.0;
            for (std::size_t s = est_first; s <= est_last; ++s) {
                sxy += (ar[i][s] - em) * (rm[s] - rm_mean);
                sxx += (rm[s] - rm_mean) * (rm[s] - rm_mean);
            }
            double ss = 0.0;
            for (std::size_t s = est_first; s <= est_last; ++s) {
                ar[i][s] = ar[i][s] - em - sxy / sxx * (rm[s] - rm_mean);
                ss += ar[i][s] * ar[i][s];
            }
            const double scale = std::sqrt(var_e * m_est / ss);
            for (std::size_t s = est_first; s <= est_last; ++s) ar[i][s] *= scale;
        }

        for (const auto& b : planted_blocks()) plant(b, cal, focal, ar, rng);

        PricePanel panel;
        panel.calendar = cal;
        panel.calendar_source = kIndex;

        auto make_series = [&](const std::string& symbol, double close0, double volume, double sigma,
                               const std::vector<double>& returns, bool is_focal) {
            SecuritySeries ser;
            ser.ticker = symbol;
            double log_p = std::log(close0);
            double prev_close = close0;
            for (std::size_t s = 0; s < T; ++s) {
                if (s > 0) log_p += returns[s];
                const double close = round_to(std::exp(log_p), 4);
                const double vm = is_focal ? focal_volume_multiplier(cal, s) : 1.0;
                const double range_sd = 0.6 * sigma * std::sqrt(vm);
                double open = round_to(prev_close * std::exp(rng.normal(0.0, 0.35 * sigma)), 4);
                if (s == 0) open = round_to(close * std::exp(rng.normal(0.0, 0.35 * sigma)), 4);
                double high = round_to(std::max(open, close) * std::exp(std::abs(rng.normal(0.0, range_sd))), 4);
                double low = round_to(std::min(open, close) * std::exp(-std::abs(rng.normal(0.0, range_sd))), 4);
                high = std::max({high, open, close});
                low = std::min({low, open, close});
                const double vol = std::round(volume * vm * std::exp(rng.normal(0.0, 0.35)));
                ser.bars.push_back(Bar{open, high, low, close, vol});
                prev_close = close;
            }
            return ser;
        };

        panel.securities.push_back(make_series(kIndex, kIndexClose0, kIndexVolume, kEstMarketSd, rm, false));
        for (std::size_t i = 0; i < n; ++i) {
            const auto& p = params[i];
            std::vector<double> r(T, 0.0);
            for (std::size_t s = 1; s < T; ++s) r[s] = p.alpha + p.beta * rm[s] + ar[i][s];
            const double sigma = std::sqrt(p.beta * p.beta * kEstMarketSd * kEstMarketSd + p.sigma_e * p.sigma_e);
            panel.securities.push_back(
                make_series(kTickers[i].symbol, kTickers[i].close0, kTickers[i].volume, sigma, r, i == focal));
        }
        std::sort(panel.securities.begin(), panel.securities.end(),
                  [](const auto& a, const auto& b) { return a.ticker < b.ticker; });

        {
            std::ofstream f(out / "prices.csv", std::ios::binary);
            write_panel(f, panel);
        }
        {
            // Daily percent, two decimals, YYYYMMDD dates.
            std::ofstream f(out / "factors.csv", std::ios::binary);
            f << "date,mkt_rf,smb,hml,rf\n";
            for (std::size_t s = 0; s < T; ++s) {
                const Date d = cal[s];
                double rf = 0.006;
                if (d >= Date::from_ymd(2018, 3, 22)) rf = 0.007;
                if (d >= Date::from_ymd(2018, 6, 14)) rf = 0.008;
                const double mkt = s == 0 ? rng.normal(-0.5, 0.5) : 100.0 * (0.9 * rm[s] + rng.normal(0.0, 0.003)) - rf;
                std::string iso = d.iso();
                iso.erase(std::remove(iso.begin(), iso.end(), '-'), iso.end());
                f << iso << ',' << text::fixed(mkt, 2) << ',' << text::fixed(rng.normal(0.0, 0.45), 2) << ','
                  << text::fixed(rng.normal(0.0, 0.45), 2) << ',' << text::fixed(rf, 3) << '\n';
            }
        }

        // Round-trip through the loaders.
        const auto check = load_panel(out / "prices.csv", kIndex);
        load_factors(out / "factors.csv", check.calendar);
        std::cerr << "wrote " << (out / "prices.csv").string() << " (" << check.securities.size() << " series, "
                  << check.calendar.size() << " days) and " << (out / "factors.csv").string() << '\n';
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "make_sample_data: " << e.what() << '\n';
        return 1;
    }
}
