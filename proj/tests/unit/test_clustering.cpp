#include "doctest.h"
#include "oracles/oracles.hpp"

#include "evstudy/clustering.hpp"
#include "evstudy/errors.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"

using namespace evstudy;

namespace {

PointSet points_of(const std::vector<std::vector<double>>& pts) {
    PointSet p;
    p.n = pts.size();
    p.dim = pts.empty() ? 0 : pts[0].size();
    for (const auto& r : pts) p.values.insert(p.values.end(), r.begin(), r.end());
    return p;
}

std::vector<std::string> names(std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back("T" + std::to_string(100 + i));
    return out;
}

std::vector<std::vector<double>> random_points(std::size_t n, std::size_t dim, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::lognormal_distribution<double> ln(0.0, 0.4);
    std::vector<std::vector<double>> pts(n, std::vector<double>(dim));
    for (auto& r : pts)
        for (auto& x : r) x = ln(rng);
    return pts;
}

// Partition as a set of sets of tickers, independent of label numbering.
std::set<std::set<std::string>> partition(const ClusterAssignment& a) {
    std::map<std::size_t, std::set<std::string>> groups;
    for (std::size_t i = 0; i < a.tickers.size(); ++i) groups[a.labels[i]].insert(a.tickers[i]);
    std::set<std::set<std::string>> out;
    for (auto& [_, g] : groups) out.insert(g);
    return out;
}

}  // namespace

TEST_SUITE("clustering") {

TEST_CASE("distance metrics") {
    const std::vector<double> a{1, 2, 3}, b{4, 0, 3};
    CHECK(distance(a, b, {MetricKind::squared_euclidean}) == doctest::Approx(13.0));
    CHECK(distance(a, b, {MetricKind::euclidean}) == doctest::Approx(std::sqrt(13.0)));
    CHECK(distance(a, b, {MetricKind::manhattan}) == doctest::Approx(5.0));
    CHECK(distance(a, b, DistanceMetric::minkowski(3)) == doctest::Approx(std::cbrt(35.0)));
    CHECK(distance(std::vector<double>{0, 0}, std::vector<double>{3, 4}, DistanceMetric::minkowski(3)) ==
          doctest::Approx(4.497941).epsilon(1e-6));
    CHECK_THROWS_AS(distance(a, std::vector<double>{1, 2}, {MetricKind::euclidean}), std::invalid_argument);
    CHECK_THROWS_AS(DistanceMetric::minkowski(0).validate(), ConfigError);
    CHECK_THROWS_AS(DistanceMetric::minkowski(-1).validate(), ConfigError);
    CHECK_NOTHROW(DistanceMetric::minkowski(1.5).validate());
}

TEST_CASE("metric identities on random vectors") {
    const auto pts = random_points(12, 5, 3);
    for (const auto& x : pts) {
        for (const auto& y : pts) {
            const double sq = distance(x, y, {MetricKind::squared_euclidean});
            CHECK(sq == doctest::Approx(std::pow(distance(x, y, {MetricKind::euclidean}), 2)).epsilon(1e-12));
            CHECK(distance(x, y, DistanceMetric::minkowski(2)) ==
                  doctest::Approx(distance(x, y, {MetricKind::euclidean})).epsilon(1e-12));
            CHECK(distance(x, y, DistanceMetric::minkowski(1)) ==
                  doctest::Approx(distance(x, y, {MetricKind::manhattan})).epsilon(1e-12));
            CHECK(distance(x, y, {MetricKind::manhattan}) == distance(y, x, {MetricKind::manhattan}));
        }
        CHECK(distance(x, x, {MetricKind::euclidean}) == 0.0);
    }
}

TEST_CASE("names round-trip") {
    CHECK(parse_metric_kind("squared_euclidean") == MetricKind::squared_euclidean);
    CHECK(parse_linkage("ward") == Linkage::ward);
    CHECK(to_string(Linkage::average) == "average");
    CHECK_THROWS_AS(parse_metric_kind("cosine"), ConfigError);
    CHECK_THROWS_AS(parse_linkage("centroid"), ConfigError);
}

TEST_CASE("pairwise distance matrix: serial and parallel agree") {
    const auto p = points_of(random_points(40, 5, 9));
    const DistanceMetric m{MetricKind::euclidean};
    const auto s = pairwise_distances(p, m, Exec::serial);
    const auto q = pairwise_distances(p, m, Exec::parallel);
    CHECK(s == q);
    for (std::size_t i = 0; i < p.n; ++i) {
        CHECK(s[i * p.n + i] == 0.0);
        for (std::size_t j = 0; j < p.n; ++j) CHECK(s[i * p.n + j] == s[j * p.n + i]);
    }
}

TEST_CASE("three points on a line, average linkage") {
    const auto p = points_of({{0.0}, {1.0}, {3.0}});
    const auto d = agglomerate(p, {"A", "B", "C"}, {MetricKind::euclidean}, Linkage::average);
    REQUIRE(d.merges.size() == 2);
    CHECK(d.merges[0].left == 0);
    CHECK(d.merges[0].right == 1);
    CHECK(d.merges[0].height == doctest::Approx(1.0));
    CHECK(d.merges[0].id == 3);
    CHECK(d.merges[1].left == 2);
    CHECK(d.merges[1].right == 3);
    CHECK(d.merges[1].height == doctest::Approx(2.5));
    const auto sq = agglomerate(p, {"A", "B", "C"}, {MetricKind::squared_euclidean}, Linkage::average);
    CHECK(sq.merges[1].height == doctest::Approx(6.5));
}

TEST_CASE("equal heights merge the smallest id pair first") {
    const auto p = points_of({{0.0}, {1.0}, {2.0}, {3.0}});
    const auto d = agglomerate(p, {"A", "B", "C", "D"}, {MetricKind::euclidean}, Linkage::average);
    REQUIRE(d.merges.size() == 3);
    CHECK(d.merges[0].left == 0);
    CHECK(d.merges[0].right == 1);
    CHECK(d.merges[1].left == 2);
    CHECK(d.merges[1].right == 3);
    CHECK(d.merges[2].left == 4);
    CHECK(d.merges[2].right == 5);
    CHECK(d.merges[2].height == doctest::Approx(2.0));
}

TEST_CASE("agglomeration matches a naive re-scan") {
    struct Combo {
        DistanceMetric m;
        oracle::Metric om;
        Linkage l;
        oracle::Link ol;
    };
    const std::vector<Combo> combos{
        {{MetricKind::squared_euclidean}, oracle::Metric::sqeuclidean, Linkage::average, oracle::Link::average},
        {{MetricKind::euclidean}, oracle::Metric::euclidean, Linkage::average, oracle::Link::average},
        {{MetricKind::manhattan}, oracle::Metric::manhattan, Linkage::single, oracle::Link::single},
        {DistanceMetric::minkowski(3), oracle::Metric::minkowski, Linkage::complete, oracle::Link::complete},
        {{MetricKind::euclidean}, oracle::Metric::euclidean, Linkage::complete, oracle::Link::complete},
        {{MetricKind::squared_euclidean}, oracle::Metric::sqeuclidean, Linkage::ward, oracle::Link::ward},
    };
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        const auto pts = random_points(9 + 5 * seed, 4 + seed % 2, seed * 101);
        for (const auto& c : combos) {
            const auto want = oracle::naive_agglomerate(pts, c.om, c.m.r, c.ol);
            for (Exec e : {Exec::serial, Exec::parallel}) {
                const auto got = agglomerate(points_of(pts), names(pts.size()), c.m, c.l, e);
                REQUIRE(got.merges.size() == want.size());
                for (std::size_t s = 0; s < want.size(); ++s) {
                    CHECK(got.merges[s].left == want[s].left);
                    CHECK(got.merges[s].right == want[s].right);
                    CHECK(got.merges[s].height == doctest::Approx(want[s].height).epsilon(1e-9));
                    CHECK(got.merges[s].id == pts.size() + s);
                }
            }
        }
    }
}

TEST_CASE("serial and parallel dendrograms are identical") {
    const auto pts = points_of(random_points(60, 5, 44));
    for (Linkage l : {Linkage::single, Linkage::complete, Linkage::average, Linkage::ward}) {
        const auto a = agglomerate(pts, names(60), {MetricKind::squared_euclidean}, l, Exec::serial);
        const auto b = agglomerate(pts, names(60), {MetricKind::squared_euclidean}, l, Exec::parallel);
        for (std::size_t s = 0; s < a.merges.size(); ++s) {
            CHECK(a.merges[s].left == b.merges[s].left);
            CHECK(a.merges[s].right == b.merges[s].right);
            CHECK(a.merges[s].height == b.merges[s].height);
        }
    }
}

TEST_CASE("heights never decrease for average, complete and ward") {
    const auto pts = points_of(random_points(30, 4, 12));
    for (Linkage l : {Linkage::complete, Linkage::average, Linkage::ward, Linkage::single}) {
        const auto d = agglomerate(pts, names(30), {MetricKind::squared_euclidean}, l);
        for (std::size_t s = 1; s < d.merges.size(); ++s) CHECK(d.merges[s].height >= d.merges[s - 1].height - 1e-12);
    }
}

TEST_CASE("agglomeration preconditions") {
    CHECK_THROWS_AS(agglomerate(points_of({{1.0}}), {"A"}, {MetricKind::euclidean}, Linkage::average),
                    NumericalError);
    CHECK_THROWS_AS(agglomerate(points_of({{1.0}, {2.0}}), {"A", "B"}, {MetricKind::euclidean}, Linkage::ward),
                    ConfigError);
    CHECK_THROWS_AS(agglomerate(points_of({{1.0}, {2.0}}), {"A"}, {MetricKind::euclidean}, Linkage::average),
                    std::invalid_argument);
}

TEST_CASE("cutting the tree") {
    const auto p = points_of({{0.0}, {0.1}, {5.0}, {5.2}, {20.0}});
    const auto d = agglomerate(p, {"A", "B", "C", "D", "FB"}, {MetricKind::euclidean}, Linkage::average);
    const auto one = cut(d, 1, "FB");
    CHECK(std::all_of(one.labels.begin(), one.labels.end(), [](auto l) { return l == 0; }));
    CHECK(focal_subsample(one, "FB").size() == 5);

    const auto three = cut(d, 3, "A");
    CHECK(three.labels == std::vector<std::size_t>{0, 0, 1, 1, 2});
    CHECK(*three.focal_cluster == 0);
    CHECK(focal_subsample(three, "C") == std::vector<std::string>{"C", "D"});
    CHECK(focal_subsample(three, "FB") == std::vector<std::string>{"FB"});

    const auto all = cut(d, 5);
    CHECK(all.labels == std::vector<std::size_t>{0, 1, 2, 3, 4});
    CHECK_FALSE(all.focal_cluster.has_value());

    CHECK_THROWS_AS(cut(d, 0), std::invalid_argument);
    CHECK_THROWS_AS(cut(d, 6), std::invalid_argument);
    CHECK_THROWS_AS(cut(d, 2, "ZZ"), DataError);
    CHECK_THROWS_AS(focal_subsample(three, "ZZ"), DataError);
}

TEST_CASE("cuts are nested and have exactly k clusters") {
    const auto pts = points_of(random_points(25, 3, 77));
    const auto d = agglomerate(pts, names(25), {MetricKind::squared_euclidean}, Linkage::average);
    std::size_t prev_size = 0;
    for (std::size_t k = 1; k <= 25; ++k) {
        const auto a = cut(d, k, "T110");
        CHECK(partition(a).size() == k);
        const auto f = focal_subsample(a, "T110");
        CHECK(std::find(f.begin(), f.end(), "T110") != f.end());
        if (k > 1) CHECK(f.size() <= prev_size);
        prev_size = f.size();
        // labels are numbered by first appearance
        std::size_t next = 0;
        for (auto l : a.labels) {
            CHECK(l <= next);
            if (l == next) ++next;
        }
    }
}

TEST_CASE("relabelling the input does not change the clusters") {
    const auto pts = random_points(20, 5, 5);
    const auto labels = names(20);
    std::vector<std::size_t> perm(20);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), std::mt19937_64(8));
    std::vector<std::vector<double>> pp;
    std::vector<std::string> pl;
    for (auto i : perm) {
        pp.push_back(pts[i]);
        pl.push_back(labels[i]);
    }
    const DistanceMetric m{MetricKind::squared_euclidean};
    const auto a = agglomerate(points_of(pts), labels, m, Linkage::average);
    const auto b = agglomerate(points_of(pp), pl, m, Linkage::average);
    for (std::size_t s = 0; s < a.merges.size(); ++s)
        CHECK(a.merges[s].height == doctest::Approx(b.merges[s].height).epsilon(1e-12));
    for (std::size_t k = 1; k <= 20; ++k) CHECK(partition(cut(a, k)) == partition(cut(b, k)));
}

TEST_CASE("dendrogram and assignment output") {
    const auto d = agglomerate(points_of({{0.0}, {1.0}, {3.0}}), {"A", "B", "FB"}, {MetricKind::euclidean},
                               Linkage::average);
    std::ostringstream js;
    write_dendrogram_json(js, d);
    const auto j = nlohmann::json::parse(js.str());
    CHECK(j["n_leaves"] == 3);
    CHECK(j["labels"][2] == "FB");
    CHECK(j["merges"].size() == 2);
    CHECK(j["merges"][1][3] == 4);
    std::ostringstream csv;
    write_assignment_csv(csv, cut(d, 2, "FB"));
    CHECK(csv.str() == "ticker,cluster_label,is_focal_cluster\nA,0,0\nB,0,0\nFB,1,1\n");
}

}  // TEST_SUITE
