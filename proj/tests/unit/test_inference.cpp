#include "doctest.h"
#include "oracles/oracles.hpp"

#include "evstudy/errors.hpp"
#include "evstudy/inference.hpp"

#include <cmath>
#include <random>

using namespace evstudy;

TEST_SUITE("inference") {

TEST_CASE("stars at the normal critical values") {
    CHECK(annotate(0.0) == Significance::none);
    CHECK(annotate(1.6449) == Significance::none);
    CHECK(annotate(1.645) == Significance::p10);
    CHECK(annotate(-1.7) == Significance::p10);
    CHECK(annotate(1.96) == Significance::p5);
    CHECK(annotate(-2.5759) == Significance::p5);
    CHECK(annotate(2.576) == Significance::p1);
    CHECK(annotate(-12.7) == Significance::p1);
    CHECK_THROWS_AS(annotate(std::nan("")), NumericalError);
    CHECK_THROWS_AS(annotate(INFINITY), NumericalError);
    CHECK(stars(Significance::none).empty());
    CHECK(stars(Significance::p10) == "*");
    CHECK(stars(Significance::p5) == "**");
    CHECK(stars(Significance::p1) == "***");
}

TEST_CASE("stars never decrease with |statistic|") {
    int last = 0;
    for (double z = 0.0; z < 4.0; z += 0.001) {
        const int level = static_cast<int>(annotate(z));
        CHECK(level >= last);
        CHECK(static_cast<int>(annotate(-z)) == level);
        last = level;
    }
}

TEST_CASE("cross-sectional t matches the textbook formula") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> z(0.002, 0.03);
    for (std::size_t n : {2u, 3u, 10u, 37u, 200u}) {
        std::vector<double> v(n);
        for (auto& x : v) x = z(rng);
        const auto r = t_caar(v);
        CHECK(r.n == n);
        CHECK(r.method == TestMethod::t_caar);
        CHECK(r.statistic == doctest::Approx(static_cast<double>(oracle::t_statistic(v))).epsilon(1e-10));
    }
    CHECK(t_caar(std::vector<double>{1.0, 2.0, 3.0}).statistic == doctest::Approx(2.0 * std::sqrt(3.0)));
    CHECK_THROWS_AS(t_caar(std::vector<double>{0.1}), NumericalError);
    CHECK_THROWS_AS(t_caar(std::vector<double>{0.1, 0.1, 0.1}), NumericalError);
}

TEST_CASE("t is invariant to positive scaling and odd in sign") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> z(0.001, 0.02);
    std::vector<double> v(25), scaled, neg;
    for (auto& x : v) x = z(rng);
    for (double x : v) {
        scaled.push_back(7.5 * x);
        neg.push_back(-x);
    }
    const double t = t_caar(v).statistic;
    CHECK(t_caar(scaled).statistic == doctest::Approx(t).epsilon(1e-12));
    CHECK(t_caar(neg).statistic == doctest::Approx(-t).epsilon(1e-12));
}

TEST_CASE("single-security AR t") {
    const std::vector<double> est{0.01, -0.01, 0.01, -0.01};
    const auto r = t_ar(0.023236, est);
    CHECK(r.statistic == doctest::Approx(1.643).epsilon(1e-3));
    CHECK(r.significance == Significance::none);
    CHECK(r.n == 4);
    CHECK(t_ar(-0.05, est).significance == Significance::p1);
    CHECK_THROWS_AS(t_ar(0.01, std::vector<double>{0.1, 0.2}), NumericalError);
    CHECK_THROWS_AS(t_ar(0.01, std::vector<double>{0.0, 0.0, 0.0}), NumericalError);
}

TEST_CASE("signed-rank summary with ties and zeros") {
    const auto s = signed_rank_summary(std::vector<double>{0.0, 1.0, -1.0, 2.0, -3.0, 3.0, 3.0});
    CHECK(s.n == 6);
    // |x| ranks: 1,1 -> 1.5; 2 -> 3; 3,3,3 -> 5
    CHECK(s.w == doctest::Approx(1.5 + 3 + 5 + 5));
    CHECK(s.tie_term == doctest::Approx(6.0 + 24.0));
}

TEST_CASE("standard Wilcoxon Z equals the exact null moments") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> z(0.003, 0.02);
    std::uniform_int_distribution<int> coarse(-4, 6);
    for (int rep = 0; rep < 12; ++rep) {
        const std::size_t n = 2 + static_cast<std::size_t>(rep) % 14;
        std::vector<double> v(n);
        // Half the cases on a coarse grid so ties and zeros occur.
        for (auto& x : v) x = rep % 2 ? static_cast<double>(coarse(rng)) : z(rng);
        std::size_t nonzero = 0;
        for (double x : v) nonzero += x != 0.0;
        if (nonzero < 2) continue;
        bool all_tied = true;
        double mag = -1;
        for (double x : v) {
            if (x == 0.0) continue;
            if (mag >= 0 && std::abs(x) != mag) all_tied = false;
            mag = std::abs(x);
        }
        if (all_tied && nonzero == 1) continue;
        const auto r = wilcoxon_signed_rank(v);
        CHECK(r.n == nonzero);
        CHECK(r.statistic == doctest::Approx(oracle::wilcoxon_exact_z(v)).epsilon(1e-9));
    }
}

TEST_CASE("paper-literal Wilcoxon centring") {
    const std::vector<double> v{0.5, -0.1, 0.2, 0.9, -0.3, 0.7};
    // ranks: 0.1->1 0.2->2 0.3->3 0.5->4 0.7->5 0.9->6; W = 4+2+6+5 = 17
    const double n = 6;
    const double sd = std::sqrt(n * (n + 1) * (2 * n + 1) / 24);
    CHECK(wilcoxon_signed_rank(v, WilcoxonMode::paper_literal).statistic ==
          doctest::Approx((17 - n * (n - 1) / 4) / sd));
    CHECK(wilcoxon_signed_rank(v).statistic == doctest::Approx((17 - n * (n + 1) / 4) / sd));
    // Without ties the two modes differ by exactly N / (2 sd).
    CHECK(wilcoxon_signed_rank(v, WilcoxonMode::paper_literal).statistic - wilcoxon_signed_rank(v).statistic ==
          doctest::Approx(n / 2 / sd));
}

TEST_CASE("Wilcoxon preconditions and symmetry") {
    CHECK_THROWS_AS(wilcoxon_signed_rank(std::vector<double>{0.0, 0.0, 1.0}), NumericalError);
    CHECK_THROWS_AS(wilcoxon_signed_rank(std::vector<double>{}), NumericalError);
    const std::vector<double> v{0.3, -0.1, 0.25, 0.4, -0.05};
    std::vector<double> neg;
    for (double x : v) neg.push_back(-x);
    CHECK(wilcoxon_signed_rank(neg).statistic == doctest::Approx(-wilcoxon_signed_rank(v).statistic));
    std::vector<double> pos{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
    const auto all_up = wilcoxon_signed_rank(pos);
    CHECK(all_up.statistic > 0);
    CHECK(all_up.method == TestMethod::wilcoxon);
}

}  // TEST_SUITE
