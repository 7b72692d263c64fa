#include "evstudy/inference.hpp"

#include "evstudy/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace evstudy {

Significance annotate(double statistic) {
    if (!std::isfinite(statistic)) throw NumericalError("annotate: non-finite statistic");
    const double z = std::abs(statistic);
    if (z >= 2.576) return Significance::p1;
    if (z >= 1.960) return Significance::p5;
    if (z >= 1.645) return Significance::p10;
    return Significance::none;
}

std::string_view stars(Significance s) {
    switch (s) {
        case Significance::none: return "";
        case Significance::p10: return "*";
        case Significance::p5: return "**";
        case Significance::p1: return "***";
    }
    return "";
}

std::string_view to_string(TestMethod m) {
    switch (m) {
        case TestMethod::t_caar: return "t_caar";
        case TestMethod::t_ar: return "t_ar";
        case TestMethod::wilcoxon: return "wilcoxon";
    }
    return "?";
}

TestResult t_caar(std::span<const double> cars) {
    const std::size_t n = cars.size();
    if (n < 2) throw NumericalError("t_caar: need at least 2 CARs, got " + std::to_string(n));
    double sum = 0.0;
    for (double c : cars) sum += c;
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0, raw = 0.0;
    for (double c : cars) {
        ss += (c - mean) * (c - mean);
        raw += c * c;
    }
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (!(ss > 1e-24 * raw)) throw NumericalError("t_caar: zero cross-sectional variance, statistic undefined");

    TestResult r;
    r.method = TestMethod::t_caar;
    r.n = n;
    r.statistic = std::sqrt(static_cast<double>(n)) * mean / sd;
    r.significance = annotate(r.statistic);
    return r;
}

TestResult t_ar(double ar, std::span<const double> estimation_ars) {
    const std::size_t m = estimation_ars.size();
    if (m < 3) throw NumericalError("t_ar: estimation window needs at least 3 ARs, got " + std::to_string(m));
    double ss = 0.0;
    for (double e : estimation_ars) ss += e * e;
    const double s = std::sqrt(ss / static_cast<double>(m - 2));
    if (!(s > 0.0)) throw NumericalError("t_ar: degenerate estimation window (all ARs zero)");

    TestResult r;
    r.method = TestMethod::t_ar;
    r.n = m;
    r.statistic = ar / s;
    r.significance = annotate(r.statistic);
    return r;
}

SignedRankSummary signed_rank_summary(std::span<const double> values) {
    std::vector<double> nz;
    nz.reserve(values.size());
    for (double v : values) {
        if (v != 0.0) nz.push_back(v);
    }
    const std::size_t n = nz.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return std::abs(nz[a]) < std::abs(nz[b]); });

    SignedRankSummary s;
    s.n = n;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && std::abs(nz[order[j + 1]]) == std::abs(nz[order[i]])) ++j;
        // positions i..j (0-based) share the average of ranks i+1..j+1
        const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        const auto t = static_cast<double>(j - i + 1);
        s.tie_term += t * t * t - t;
        for (std::size_t k = i; k <= j; ++k) {
            if (nz[order[k]] > 0.0) s.w += avg_rank;
        }
        i = j + 1;
    }
    return s;
}

TestResult wilcoxon_signed_rank(std::span<const double> values, WilcoxonMode mode) {
    const SignedRankSummary s = signed_rank_summary(values);
    if (s.n < 2) {
        throw NumericalError("wilcoxon: need at least 2 non-zero values, got " + std::to_string(s.n));
    }
    const auto n = static_cast<double>(s.n);
    const double base_var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0;
    double centre = 0.0;
    double var = 0.0;
    if (mode == WilcoxonMode::standard) {
        centre = n * (n + 1.0) / 4.0;
        var = base_var - s.tie_term / 48.0;
    } else {
        centre = n * (n - 1.0) / 4.0;
        var = base_var;
    }
    if (!(var > 0.0)) throw NumericalError("wilcoxon: zero variance (all magnitudes tied)");

    TestResult r;
    r.method = TestMethod::wilcoxon;
    r.n = s.n;
    r.statistic = (s.w - centre) / std::sqrt(var);
    r.significance = annotate(r.statistic);
    return r;
}

}  // namespace evstudy
