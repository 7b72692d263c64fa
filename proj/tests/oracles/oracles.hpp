// Independent reference computations for the tests. Deliberately naive:
// long double, textbook formulas, no shared code with the library.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <utility>
#include <vector>

namespace oracle {

struct Line {
    long double alpha = 0, beta = 0;
};

// Solve [n Sx; Sx Sxx] [a b]' = [Sy Sxy]' by Cramer's rule.
inline Line ols_normal_equations(const std::vector<double>& x, const std::vector<double>& y) {
    long double n = static_cast<long double>(x.size()), sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += static_cast<long double>(x[i]) * x[i];
        sxy += static_cast<long double>(x[i]) * y[i];
    }
    const long double det = n * sxx - sx * sx;
    return {(sy * sxx - sx * sxy) / det, (n * sxy - sx * sy) / det};
}

// cov(x, y) / var(x) with sample (n - 1) moments.
inline long double cov_over_var(const std::vector<double>& x, const std::vector<double>& y) {
    const auto n = static_cast<long double>(x.size());
    long double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    long double c = 0, v = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        c += (x[i] - mx) * (y[i] - my);
        v += (x[i] - mx) * (x[i] - mx);
    }
    return (c / (n - 1)) / (v / (n - 1));
}

inline long double t_statistic(const std::vector<double>& v) {
    const auto n = static_cast<long double>(v.size());
    long double m = 0;
    for (double x : v) m += x;
    m /= n;
    long double s2 = 0;
    for (double x : v) s2 += (x - m) * (x - m);
    s2 /= (n - 1);
    return std::sqrt(n) * m / std::sqrt(s2);
}

// Exact signed-rank Z: rank |x| (midranks for ties) after dropping zeros,
// then enumerate all 2^N sign patterns for the null mean and variance of W.
inline double wilcoxon_exact_z(const std::vector<double>& values) {
    std::vector<double> v;
    for (double x : values) {
        if (x != 0.0) v.push_back(x);
    }
    const std::size_t n = v.size();
    std::vector<long double> rank(n);
    for (std::size_t i = 0; i < n; ++i) {
        long double below = 0, equal = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (std::fabs(v[j]) < std::fabs(v[i])) below += 1;
            if (std::fabs(v[j]) == std::fabs(v[i])) equal += 1;
        }
        rank[i] = below + (equal + 1) / 2;
    }
    long double w = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (v[i] > 0) w += rank[i];
    }
    const std::uint64_t patterns = std::uint64_t{1} << n;
    long double s1 = 0, s2 = 0;
    for (std::uint64_t mask = 0; mask < patterns; ++mask) {
        long double wm = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (mask >> i & 1U) wm += rank[i];
        }
        s1 += wm;
        s2 += wm * wm;
    }
    const long double mean = s1 / patterns;
    const long double var = s2 / patterns - mean * mean;
    return static_cast<double>((w - mean) / std::sqrt(var));
}

enum class Metric { sqeuclidean, euclidean, manhattan, minkowski };
enum class Link { single, complete, average, ward };

inline double dist(const std::vector<double>& a, const std::vector<double>& b, Metric m, double r) {
    long double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const long double d = std::fabs(static_cast<long double>(a[i]) - b[i]);
        switch (m) {
            case Metric::sqeuclidean:
            case Metric::euclidean: s += d * d; break;
            case Metric::manhattan: s += d; break;
            case Metric::minkowski: s += std::pow(d, static_cast<long double>(r)); break;
        }
    }
    if (m == Metric::euclidean) return static_cast<double>(std::sqrt(s));
    if (m == Metric::minkowski) return static_cast<double>(std::pow(s, 1.0L / r));
    return static_cast<double>(s);
}

struct OracleMerge {
    std::size_t left, right;
    double height;
};

// Re-scan every active pair at every step, recomputing the linkage from the
// raw points each time.
inline std::vector<OracleMerge> naive_agglomerate(const std::vector<std::vector<double>>& pts, Metric m, double r,
                                                  Link link) {
    const std::size_t n = pts.size();
    std::vector<std::vector<std::size_t>> members(n);
    std::vector<std::size_t> ids(n);
    for (std::size_t i = 0; i < n; ++i) {
        members[i] = {i};
        ids[i] = i;
    }
    auto linkage = [&](const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) -> long double {
        if (link == Link::ward) {
            const std::size_t dim = pts[0].size();
            std::vector<long double> ca(dim, 0), cb(dim, 0);
            for (auto i : a)
                for (std::size_t k = 0; k < dim; ++k) ca[k] += pts[i][k];
            for (auto i : b)
                for (std::size_t k = 0; k < dim; ++k) cb[k] += pts[i][k];
            long double d2 = 0;
            for (std::size_t k = 0; k < dim; ++k) {
                const long double d = ca[k] / a.size() - cb[k] / b.size();
                d2 += d * d;
            }
            const long double na = a.size(), nb = b.size();
            return na * nb / (na + nb) * d2;
        }
        long double best = link == Link::single ? std::numeric_limits<long double>::infinity() : 0;
        long double sum = 0;
        for (auto i : a) {
            for (auto j : b) {
                const long double d = dist(pts[i], pts[j], m, r);
                if (link == Link::single) best = std::min(best, d);
                if (link == Link::complete) best = std::max(best, d);
                sum += d;
            }
        }
        if (link == Link::average) return sum / (static_cast<long double>(a.size()) * b.size());
        return best;
    };

    std::vector<OracleMerge> out;
    std::size_t next_id = n;
    while (members.size() > 1) {
        long double bh = std::numeric_limits<long double>::infinity();
        std::size_t ba = 0, bb = 0;
        std::pair<std::size_t, std::size_t> bkey{std::numeric_limits<std::size_t>::max(), 0};
        for (std::size_t a = 0; a < members.size(); ++a) {
            for (std::size_t b = a + 1; b < members.size(); ++b) {
                const long double h = linkage(members[a], members[b]);
                const std::pair<std::size_t, std::size_t> key{std::min(ids[a], ids[b]), std::max(ids[a], ids[b])};
                if (h < bh || (h == bh && key < bkey)) {
                    bh = h;
                    bkey = key;
                    ba = a;
                    bb = b;
                }
            }
        }
        out.push_back({bkey.first, bkey.second, static_cast<double>(bh)});
        members[ba].insert(members[ba].end(), members[bb].begin(), members[bb].end());
        ids[ba] = next_id++;
        members.erase(members.begin() + static_cast<long>(bb));
        ids.erase(ids.begin() + static_cast<long>(bb));
    }
    return out;
}

}  // namespace oracle
