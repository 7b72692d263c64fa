// clustering.hpp
// Agglomerative hierarchical clustering of feature vectors.
//
// Leaves carry ids 0..n-1 and the cluster created by merge s carries id n+s.
// At every step the pair of active clusters with the smallest linkage value is
// merged; equal values are broken by the lexicographically smallest
// (min_id, max_id). Average linkage is the unweighted mean of all pairwise
// point distances between the two clusters (UPGMA), recomputed from the
// members. Ward reports the increase in within-cluster sum of squares and is
// only defined for the squared Euclidean metric.

#pragma once

#include "evstudy/exclusion.hpp"

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace evstudy {

class FeatureMatrix;

enum class MetricKind { squared_euclidean, euclidean, manhattan, minkowski };

struct DistanceMetric {
    MetricKind kind = MetricKind::squared_euclidean;
    double r = 2.0;  // minkowski exponent

    static DistanceMetric minkowski(double r) { return {MetricKind::minkowski, r}; }
    // Throws ConfigError for a non-finite or non-positive minkowski exponent.
    void validate() const;
};

enum class Linkage { single, complete, average, ward };

std::string to_string(const DistanceMetric& metric);
std::string_view to_string(Linkage linkage);
// Throw ConfigError on unknown names.
MetricKind parse_metric_kind(std::string_view name);
Linkage parse_linkage(std::string_view name);

// Throws std::invalid_argument on a dimension mismatch.
double distance(std::span<const double> a, std::span<const double> b, const DistanceMetric& metric);

struct PointSet {
    std::size_t n = 0;
    std::size_t dim = 0;
    std::vector<double> values;  // row-major n x dim

    std::span<const double> row(std::size_t i) const { return {values.data() + i * dim, dim}; }
};

// Full symmetric n x n matrix of point distances, row-major.
std::vector<double> pairwise_distances(const PointSet& points, const DistanceMetric& metric,
                                       Exec exec = Exec::parallel);

struct Merge {
    std::size_t left = 0;   // smaller id
    std::size_t right = 0;  // larger id
    double height = 0.0;
    std::size_t id = 0;
};

struct Dendrogram {
    std::size_t n_leaves = 0;
    std::vector<std::string> labels;
    std::vector<Merge> merges;
};

// Throws NumericalError with fewer than two points; ConfigError for ward
// with a metric other than squared Euclidean.
Dendrogram agglomerate(const PointSet& points, std::vector<std::string> labels,
                       const DistanceMetric& metric, Linkage linkage, Exec exec = Exec::parallel);
Dendrogram agglomerate(const FeatureMatrix& matrix, const DistanceMetric& metric, Linkage linkage,
                       Exec exec = Exec::parallel);

struct ClusterAssignment {
    std::size_t k = 0;
    std::vector<std::string> tickers;  // dendrogram label order
    std::vector<std::size_t> labels;   // 0..k-1, numbered by first leaf
    std::optional<std::size_t> focal_cluster;
};

// Undo the last k-1 merges. Throws std::invalid_argument unless
// 1 <= k <= n_leaves, and DataError when `focal` is given but absent.
ClusterAssignment cut(const Dendrogram& dendrogram, std::size_t k, std::string_view focal = {});

// Tickers sharing the focal security's label, in label order; throws
// DataError when the focal security is absent.
std::vector<std::string> focal_subsample(const ClusterAssignment& assignment, std::string_view focal);

// {"n_leaves":n,"labels":[...],"merges":[[left,right,height,new_id],...]}
void write_dendrogram_json(std::ostream& out, const Dendrogram& dendrogram);
// CSV: ticker,cluster_label,is_focal_cluster
void write_assignment_csv(std::ostream& out, const ClusterAssignment& assignment);

}  // namespace evstudy
