#include "evstudy/clustering.hpp"

#include "evstudy/errors.hpp"
#include "evstudy/features.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace evstudy {

void DistanceMetric::validate() const {
    if (kind == MetricKind::minkowski && !(std::isfinite(r) && r > 0.0)) {
        throw ConfigError("minkowski exponent must be finite and positive");
    }
}

std::string to_string(const DistanceMetric& metric) {
    switch (metric.kind) {
        case MetricKind::squared_euclidean: return "squared_euclidean";
        case MetricKind::euclidean: return "euclidean";
        case MetricKind::manhattan: return "manhattan";
        case MetricKind::minkowski: {
            std::string r = std::to_string(metric.r);
            r.erase(r.find_last_not_of('0') + 1);
            if (r.back() == '.') r.pop_back();
            return "minkowski(" + r + ")";
        }
    }
    return "?";
}

std::string_view to_string(Linkage linkage) {
    switch (linkage) {
        case Linkage::single: return "single";
        case Linkage::complete: return "complete";
        case Linkage::average: return "average";
        case Linkage::ward: return "ward";
    }
    return "?";
}

MetricKind parse_metric_kind(std::string_view name) {
    if (name == "squared_euclidean") return MetricKind::squared_euclidean;
    if (name == "euclidean") return MetricKind::euclidean;
    if (name == "manhattan") return MetricKind::manhattan;
    if (name == "minkowski") return MetricKind::minkowski;
    throw ConfigError("unknown distance metric '" + std::string(name) + "'");
}

Linkage parse_linkage(std::string_view name) {
    if (name == "single") return Linkage::single;
    if (name == "complete") return Linkage::complete;
    if (name == "average") return Linkage::average;
    if (name == "ward") return Linkage::ward;
    throw ConfigError("unknown linkage '" + std::string(name) + "'");
}

double distance(std::span<const double> a, std::span<const double> b, const DistanceMetric& metric) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("distance: dimension mismatch (" + std::to_string(a.size()) + " vs " +
                                    std::to_string(b.size()) + ")");
    }
    double acc = 0.0;
    switch (metric.kind) {
        case MetricKind::squared_euclidean:
        case MetricKind::euclidean:
            for (std::size_t i = 0; i < a.size(); ++i) {
                const double d = a[i] - b[i];
                acc += d * d;
            }
            return metric.kind == MetricKind::euclidean ? std::sqrt(acc) : acc;
        case MetricKind::manhattan:
            for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
            return acc;
        case MetricKind::minkowski:
            for (std::size_t i = 0; i < a.size(); ++i) acc += std::pow(std::abs(a[i] - b[i]), metric.r);
            return std::pow(acc, 1.0 / metric.r);
    }
    return acc;
}

std::vector<double> pairwise_distances(const PointSet& points, const DistanceMetric& metric, Exec exec) {
    const std::size_t n = points.n;
    std::vector<double> d(n * n, 0.0);
    const auto rows = static_cast<long long>(n);
    auto fill_row = [&](long long ii) {
        const auto i = static_cast<std::size_t>(ii);
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = distance(points.row(i), points.row(j), metric);
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    };
    if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 4)
        for (long long i = 0; i < rows; ++i) fill_row(i);
    } else {
        for (long long i = 0; i < rows; ++i) fill_row(i);
    }
    return d;
}

namespace {

struct Cluster {
    std::size_t id = 0;
    std::vector<std::size_t> members;
    std::vector<double> centroid;  // ward only
};

class Linker {
public:
    Linker(const PointSet& points, const std::vector<double>& d, Linkage linkage)
        : points_(points), d_(d), linkage_(linkage) {}

    double operator()(const Cluster& a, const Cluster& b) const {
        const std::size_t n = points_.n;
        switch (linkage_) {
            case Linkage::single: {
                double best = std::numeric_limits<double>::infinity();
                for (auto i : a.members)
                    for (auto j : b.members) best = std::min(best, d_[i * n + j]);
                return best;
            }
            case Linkage::complete: {
                double worst = -std::numeric_limits<double>::infinity();
                for (auto i : a.members)
                    for (auto j : b.members) worst = std::max(worst, d_[i * n + j]);
                return worst;
            }
            case Linkage::average: {
                double sum = 0.0;
                for (auto i : a.members)
                    for (auto j : b.members) sum += d_[i * n + j];
                return sum / static_cast<double>(a.members.size() * b.members.size());
            }
            case Linkage::ward: {
                double sq = 0.0;
                for (std::size_t c = 0; c < a.centroid.size(); ++c) {
                    const double diff = a.centroid[c] - b.centroid[c];
                    sq += diff * diff;
                }
                const auto na = static_cast<double>(a.members.size());
                const auto nb = static_cast<double>(b.members.size());
                return na * nb / (na + nb) * sq;
            }
        }
        return 0.0;
    }

    std::vector<double> centroid(const std::vector<std::size_t>& members) const {
        std::vector<double> c(points_.dim, 0.0);
        for (auto m : members) {
            const auto row = points_.row(m);
            for (std::size_t k = 0; k < c.size(); ++k) c[k] += row[k];
        }
        for (auto& v : c) v /= static_cast<double>(members.size());
        return c;
    }

private:
    const PointSet& points_;
    const std::vector<double>& d_;
    Linkage linkage_;
};

// (height, min_id, max_id) ordering.
bool better(double h, std::size_t lo, std::size_t hi, double bh, std::size_t blo, std::size_t bhi) {
    if (h != bh) return h < bh;
    if (lo != blo) return lo < blo;
    return hi < bhi;
}

}  // namespace

Dendrogram agglomerate(const PointSet& points, std::vector<std::string> labels, const DistanceMetric& metric,
                       Linkage linkage, Exec exec) {
    metric.validate();
    const std::size_t n = points.n;
    if (n < 2) throw NumericalError("agglomerate: need at least 2 securities, got " + std::to_string(n));
    if (labels.size() != n) throw std::invalid_argument("agglomerate: label count differs from point count");
    if (linkage == Linkage::ward && metric.kind != MetricKind::squared_euclidean) {
        throw ConfigError("ward linkage requires the squared_euclidean metric");
    }

    const std::vector<double> d = pairwise_distances(points, metric, exec);
    const Linker link(points, d, linkage);

    // Slot-indexed clusters; a merged cluster takes the lower slot.
    std::vector<Cluster> slots(n);
    std::vector<bool> active(n, true);
    for (std::size_t i = 0; i < n; ++i) {
        slots[i].id = i;
        slots[i].members = {i};
        if (linkage == Linkage::ward) slots[i].centroid = link.centroid(slots[i].members);
    }
    std::vector<double> cd(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) cd[i * n + j] = cd[j * n + i] = link(slots[i], slots[j]);

    Dendrogram out;
    out.n_leaves = n;
    out.labels = std::move(labels);
    out.merges.reserve(n - 1);

    for (std::size_t step = 0; step + 1 < n; ++step) {
        double best_h = std::numeric_limits<double>::infinity();
        std::size_t best_lo = std::numeric_limits<std::size_t>::max();
        std::size_t best_hi = best_lo;
        std::size_t best_a = 0, best_b = 0;
        for (std::size_t a = 0; a < n; ++a) {
            if (!active[a]) continue;
            for (std::size_t b = a + 1; b < n; ++b) {
                if (!active[b]) continue;
                const double h = cd[a * n + b];
                const std::size_t lo = std::min(slots[a].id, slots[b].id);
                const std::size_t hi = std::max(slots[a].id, slots[b].id);
                if (better(h, lo, hi, best_h, best_lo, best_hi)) {
                    best_h = h;
                    best_lo = lo;
                    best_hi = hi;
                    best_a = a;
                    best_b = b;
                }
            }
        }

        const std::size_t new_id = n + step;
        out.merges.push_back({best_lo, best_hi, best_h, new_id});

        Cluster merged;
        merged.id = new_id;
        merged.members = slots[best_a].members;
        merged.members.insert(merged.members.end(), slots[best_b].members.begin(), slots[best_b].members.end());
        if (linkage == Linkage::ward) merged.centroid = link.centroid(merged.members);
        slots[best_a] = std::move(merged);
        slots[best_b] = Cluster{};
        active[best_b] = false;

        const auto others = static_cast<long long>(n);
        auto refresh = [&](long long kk) {
            const auto k = static_cast<std::size_t>(kk);
            if (k == best_a || !active[k]) return;
            const double v = link(slots[best_a], slots[k]);
            cd[best_a * n + k] = v;
            cd[k * n + best_a] = v;
        };
        if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 4)
            for (long long k = 0; k < others; ++k) refresh(k);
        } else {
            for (long long k = 0; k < others; ++k) refresh(k);
        }
    }
    return out;
}

Dendrogram agglomerate(const FeatureMatrix& matrix, const DistanceMetric& metric, Linkage linkage, Exec exec) {
    PointSet points;
    points.n = matrix.size();
    points.dim = matrix.dim();
    points.values = matrix.normalized;
    return agglomerate(points, matrix.tickers(), metric, linkage, exec);
}

ClusterAssignment cut(const Dendrogram& dendrogram, std::size_t k, std::string_view focal) {
    const std::size_t n = dendrogram.n_leaves;
    if (k < 1 || k > n) {
        throw std::invalid_argument("cut: k=" + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
    }
    // Union-find over all 2n-1 ids.
    std::vector<std::size_t> parent(2 * n - 1);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (std::size_t s = 0; s < n - k; ++s) {
        const Merge& m = dendrogram.merges[s];
        parent[find(m.left)] = m.id;
        parent[find(m.right)] = m.id;
    }

    ClusterAssignment a;
    a.k = k;
    a.tickers = dendrogram.labels;
    a.labels.assign(n, 0);
    std::vector<std::size_t> root_label(2 * n - 1, std::numeric_limits<std::size_t>::max());
    std::size_t next = 0;
    for (std::size_t leaf = 0; leaf < n; ++leaf) {
        const auto root = find(leaf);
        if (root_label[root] == std::numeric_limits<std::size_t>::max()) root_label[root] = next++;
        a.labels[leaf] = root_label[root];
    }
    if (!focal.empty()) {
        auto it = std::find(a.tickers.begin(), a.tickers.end(), focal);
        if (it == a.tickers.end()) {
            throw DataError("focal security '" + std::string(focal) + "' not in cluster assignment");
        }
        a.focal_cluster = a.labels[static_cast<std::size_t>(it - a.tickers.begin())];
    }
    return a;
}

std::vector<std::string> focal_subsample(const ClusterAssignment& assignment, std::string_view focal) {
    auto it = std::find(assignment.tickers.begin(), assignment.tickers.end(), focal);
    if (it == assignment.tickers.end()) {
        throw DataError("focal security '" + std::string(focal) + "' not in cluster assignment");
    }
    const auto label = assignment.labels[static_cast<std::size_t>(it - assignment.tickers.begin())];
    std::vector<std::string> out;
    for (std::size_t i = 0; i < assignment.tickers.size(); ++i) {
        if (assignment.labels[i] == label) out.push_back(assignment.tickers[i]);
    }
    return out;
}

void write_dendrogram_json(std::ostream& out, const Dendrogram& dendrogram) {
    nlohmann::ordered_json j;
    j["n_leaves"] = dendrogram.n_leaves;
    j["labels"] = dendrogram.labels;
    auto merges = nlohmann::ordered_json::array();
    for (const auto& m : dendrogram.merges) merges.push_back({m.left, m.right, m.height, m.id});
    j["merges"] = std::move(merges);
    out << j.dump(2) << '\n';
}

void write_assignment_csv(std::ostream& out, const ClusterAssignment& assignment) {
    out << "ticker,cluster_label,is_focal_cluster\n";
    for (std::size_t i = 0; i < assignment.tickers.size(); ++i) {
        const bool focal = assignment.focal_cluster && *assignment.focal_cluster == assignment.labels[i];
        out << assignment.tickers[i] << ',' << assignment.labels[i] << ',' << (focal ? 1 : 0) << '\n';
    }
}

}  // namespace evstudy
