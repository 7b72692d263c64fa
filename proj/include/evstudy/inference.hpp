// inference.hpp
// Cross-sectional t-test on CARs, single-security AR t-test, Wilcoxon
// signed-rank test, and significance stars at two-sided normal critical
// values (1.645 / 1.960 / 2.576).

#pragma once

#include <cstddef>
#include <span>
#include <string_view>

namespace evstudy {

enum class Significance { none, p10, p5, p1 };
enum class TestMethod { t_caar, t_ar, wilcoxon };

struct TestResult {
    double statistic = 0.0;
    std::size_t n = 0;
    Significance significance = Significance::none;
    TestMethod method = TestMethod::t_caar;
};

// Throws NumericalError for a non-finite statistic.
Significance annotate(double statistic);
std::string_view stars(Significance s);
std::string_view to_string(TestMethod m);

// sqrt(N) * mean / sample stddev (N - 1 divisor). Throws NumericalError when
// N < 2 or all values are equal.
TestResult t_caar(std::span<const double> cars);

// AR / sqrt(sum(est_ar^2) / (M - 2)) with M = estimation_ars.size().
// Throws NumericalError when M < 3 or the estimation ARs are all zero.
TestResult t_ar(double ar, std::span<const double> estimation_ars);

// standard:      Z = (W - N(N+1)/4) / sqrt(N(N+1)(2N+1)/24 - sum(t^3 - t)/48)
// paper_literal: Z = (W - N(N-1)/4) / sqrt(N(N+1)(2N+1)/24)
// W is the sum of the (average) ranks of |x| over positive x; exact zeros
// are dropped first and N reduced.
enum class WilcoxonMode { standard, paper_literal };

struct SignedRankSummary {
    double w = 0.0;         // rank sum of positive values
    std::size_t n = 0;      // non-zero values
    double tie_term = 0.0;  // sum over tie groups of (t^3 - t)
};

SignedRankSummary signed_rank_summary(std::span<const double> values);

// Throws NumericalError when fewer than 2 non-zero values remain.
TestResult wilcoxon_signed_rank(std::span<const double> values, WilcoxonMode mode = WilcoxonMode::standard);

}  // namespace evstudy
