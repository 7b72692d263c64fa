#include "doctest.h"
#include "helpers.hpp"
#include "oracles/oracles.hpp"

#include "evstudy/errors.hpp"
#include "evstudy/event_study.hpp"

#include <random>
#include <sstream>

using namespace evstudy;

namespace {

const Date kEvent = Date::parse_iso("2018-03-19");

AbnormalReturnMatrix random_ars(std::size_t n, int first, int last, std::uint64_t seed) {
    std::vector<std::string> t;
    for (std::size_t i = 0; i < n; ++i) t.push_back("S" + std::to_string(100 + i));
    AbnormalReturnMatrix m(kEvent, first, last, t);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0.0, 0.015);
    for (std::size_t i = 0; i < n; ++i) {
        for (int d = first; d <= last; ++d) m.set(i, d, z(rng));
    }
    return m;
}

SampleCategory all_of(const AbnormalReturnMatrix& m) { return {"all", CategoryKind::all, m.tickers()}; }

EventSpec spec(DayRange pre, DayRange post) {
    EventSpec e;
    e.name = "e";
    e.event_date = kEvent;
    e.pre_window = pre;
    e.post_window = post;
    e.feature_window = {kEvent, 5, WindowSide::before};
    return e;
}

}  // namespace

TEST_SUITE("event_study") {

TEST_CASE("event spec windows") {
    CHECK_NOTHROW(spec({-5, -1}, {0, 14}).validate());
    CHECK_THROWS_AS(spec({-5, 0}, {0, 14}).validate(), ConfigError);
    CHECK_THROWS_AS(spec({-3, -5}, {0, 14}).validate(), ConfigError);
    CHECK_THROWS_AS(spec({-5, -1}, {1, 14}).validate(), ConfigError);
    auto e = spec({-5, -1}, {0, 14});
    e.feature_window.length = 20;
    CHECK(e.first_day() == -20);
    CHECK(e.last_day() == 14);
    e.feature_window.side = WindowSide::after;
    CHECK(e.first_day() == -5);
    CHECK(e.last_day() == 20);
}

TEST_CASE("category validation") {
    const std::vector<std::string> u{"A", "B", "FB"};
    CHECK_NOTHROW((SampleCategory{"c", CategoryKind::clustered_5var, {"A", "FB"}}.validate(u, "FB")));
    CHECK_THROWS_AS((SampleCategory{"c", CategoryKind::clustered_5var, {"A", "B"}}.validate(u, "FB")), ConfigError);
    CHECK_THROWS_AS((SampleCategory{"c", CategoryKind::all, {"Z"}}.validate(u, "FB")), ConfigError);
    CHECK_THROWS_AS((SampleCategory{"c", CategoryKind::all, {}}.validate(u, "FB")), ConfigError);
    CHECK_NOTHROW((SampleCategory{"c", CategoryKind::custom, {"A"}}.validate(u, "FB")));
}

TEST_CASE("CAR on a hand-built matrix") {
    AbnormalReturnMatrix m(kEvent, -2, 2, {"A", "B"});
    const double a[] = {0.01, -0.02, 0.03, 0.0, 0.005};
    for (int d = -2; d <= 2; ++d) {
        m.set(0, d, a[d + 2]);
        m.set(1, d, d == 1 ? std::nullopt : std::optional<double>(0.001));
    }
    CHECK(*car(m, 0, -2, 2) == doctest::Approx(0.025));
    CHECK(*car(m, 0, 0, 0) == doctest::Approx(0.03));
    CHECK_FALSE(car(m, 1, 0, 2).has_value());
    CHECK(*car(m, 1, -2, 0) == doctest::Approx(0.003));

    const auto r = caar(m, {"x", CategoryKind::custom, {"A", "B"}}, -2, 0, 1);
    CHECK(r.n() == 2);
    CHECK(r.caar == doctest::Approx((0.02 + 0.003) / 2));
    const auto dropped = caar(m, {"x", CategoryKind::custom, {"A", "B"}}, 0, 2, 1);
    CHECK(dropped.n() == 1);
    REQUIRE(dropped.excluded.size() == 1);
    CHECK(dropped.excluded[0].ticker == "B");
    CHECK(dropped.excluded[0].reason == "missing_ar");
    CHECK_THROWS_AS(caar(m, {"x", CategoryKind::custom, {"A", "B"}}, 0, 2), NumericalError);
    CHECK_THROWS_AS(caar(m, {"x", CategoryKind::custom, {"Q"}}, 0, 2), DataError);
}

TEST_CASE("mean of CARs equals the sum of daily mean ARs") {
    const auto m = random_ars(23, -10, 20, 4);
    const auto cat = all_of(m);
    for (int t1 = -10; t1 <= 20; t1 += 3) {
        for (int t2 = t1; t2 <= 20; t2 += 4) {
            CHECK(caar(m, cat, t1, t2).caar ==
                  doctest::Approx(caar_from_daily_means(m, cat, t1, t2)).epsilon(1e-12));
        }
    }
}

TEST_CASE("CAR is additive over adjacent ranges") {
    const auto m = random_ars(5, -10, 20, 9);
    for (std::size_t row = 0; row < 5; ++row) {
        for (int mid = -9; mid <= 20; mid += 5) {
            CHECK(*car(m, row, -10, 20) ==
                  doctest::Approx(*car(m, row, -10, mid - 1) + *car(m, row, mid, 20)).epsilon(1e-12));
        }
    }
}

TEST_CASE("CAAR series accumulate from the window starts") {
    const auto m = random_ars(11, -8, 10, 15);
    const auto cat = all_of(m);
    const auto e = spec({-5, -1}, {0, 10});
    const auto s = caar_series(m, cat, e);
    REQUIRE(s.pre.size() == 5);
    REQUIRE(s.post.size() == 11);
    CHECK(s.excluded.empty());
    for (const auto& p : s.pre) {
        CHECK(p.caar == doctest::Approx(caar(m, cat, -5, p.day).caar).epsilon(1e-12));
        CHECK(p.n() == 11);
    }
    for (const auto& p : s.post) {
        CHECK(p.caar == doctest::Approx(caar(m, cat, 0, p.day).caar).epsilon(1e-12));
        const auto ref = caar(m, cat, 0, p.day).cars;
        for (std::size_t i = 0; i < ref.size(); ++i) CHECK(p.cars[i] == doctest::Approx(ref[i]).epsilon(1e-12));
    }
    // Increments of the accumulated series are the daily mean ARs.
    for (std::size_t i = 1; i < s.post.size(); ++i) {
        const int d = s.post[i].day;
        CHECK(s.post[i].caar - s.post[i - 1].caar ==
              doctest::Approx(caar_from_daily_means(m, cat, d, d)).epsilon(1e-9));
    }

    const auto daily = caar_series(m, cat, e, PreWindowMode::per_day);
    for (const auto& p : daily.pre) CHECK(p.caar == doctest::Approx(caar(m, cat, p.day, p.day).caar).epsilon(1e-12));
    CHECK_THROWS_AS(caar_series(m, cat, spec({-9, -1}, {0, 10})), DataError);
}

TEST_CASE("a single-security category traces that security's CAR") {
    const auto m = random_ars(3, -5, 5, 2);
    const auto s = caar_series(m, {"one", CategoryKind::custom, {"S101"}}, spec({-5, -1}, {0, 5}));
    for (const auto& p : s.post) CHECK(p.caar == doctest::Approx(*car(m, 1, 0, p.day)).epsilon(1e-12));
}

TEST_CASE("a gap drops the security from the rest of the window") {
    auto m = random_ars(4, -5, 5, 8);
    m.set(2, 2, std::nullopt);
    m.set(3, -4, std::nullopt);
    const auto cat = all_of(m);
    const auto s = caar_series(m, cat, spec({-5, -1}, {0, 5}));
    CHECK(s.pre[0].n() == 4);
    CHECK(s.pre[1].n() == 3);
    CHECK(s.post[0].n() == 4);  // security 3 is back for the post window
    CHECK(s.post[1].n() == 4);
    CHECK(s.post[2].n() == 3);
    CHECK(s.post[5].n() == 3);
    REQUIRE(s.excluded.size() == 2);
    CHECK(s.excluded[0].ticker == "S103");
    CHECK(s.excluded[1].ticker == "S102");

    const auto daily = caar_series(m, cat, spec({-5, -1}, {0, 5}), PreWindowMode::per_day);
    CHECK(daily.pre[1].n() == 3);
    CHECK(daily.pre[2].n() == 4);
}

TEST_CASE("CAAR csv output") {
    const auto m = random_ars(2, -2, 1, 1);
    const auto s = caar_series(m, all_of(m), spec({-2, -1}, {0, 1}));
    std::ostringstream out;
    write_caar_csv_header(out);
    write_caar_csv_rows(out, "event1", "all", s);
    std::istringstream in(out.str());
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(in, line)) lines.push_back(line);
    REQUIRE(lines.size() == 5);
    CHECK(lines[0] == "event,category,relative_day,caar,n_securities");
    CHECK(lines[1].rfind("event1,all,-2,", 0) == 0);
    CHECK(lines[4].substr(lines[4].size() - 2) == ",2");
    std::ostringstream plot;
    write_caar_plot(plot, s);
    CHECK(plot.str().rfind("relative_day,caar\n-2,", 0) == 0);
}

}  // TEST_SUITE
