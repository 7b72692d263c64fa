// study.hpp
// Study configuration, validation, and the batch pipeline behind the CLI:
// load -> market-model fits -> abnormal returns -> features -> clustering ->
// CAAR series and tests -> report files.

#pragma once

#include "evstudy/clustering.hpp"
#include "evstudy/event_study.hpp"
#include "evstudy/features.hpp"
#include "evstudy/inference.hpp"
#include "evstudy/market_data.hpp"
#include "evstudy/market_model.hpp"

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace evstudy {

struct ClusteringSettings {
    DistanceMetric metric;
    Linkage linkage = Linkage::average;
    std::size_t k = 5;
    std::vector<FeatureMode> modes = {FeatureMode::four_variable, FeatureMode::five_variable};
    std::vector<std::size_t> report_k = {2, 3, 4, 5, 6, 8, 10};
};

struct PostClusteringSpec {
    std::string anchor_event;
    int length = 20;
    WindowSide side = WindowSide::after;
};

struct StudyConfig {
    std::filesystem::path prices_path;
    std::filesystem::path factors_path;
    std::string market_index;
    std::string focal;
    std::vector<std::string> universe;  // empty: every panel ticker except the index
    std::string estimation_anchor;
    int estimation_start = -52;
    int estimation_end = -1;
    std::vector<EventSpec> events;
    std::optional<PostClusteringSpec> post_clustering;
    ClusteringSettings clustering;
    WilcoxonMode wilcoxon = WilcoxonMode::standard;
    PreWindowMode pre_window_mode = PreWindowMode::accumulated;
    std::filesystem::path output_dir;

    // Problems found while parsing; reported by validate_config.
    std::vector<std::string> parse_errors;

    const EventSpec* find_event(std::string_view name) const;
};

// JSON (comments allowed). Relative paths resolve against `base_dir`.
// Structural problems are collected into parse_errors rather than thrown;
// only unreadable or syntactically invalid input throws ConfigError.
StudyConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir);
StudyConfig load_config(const std::filesystem::path& path);

// Every violated invariant, all at once. Loads the data files when they are
// present so ticker, date and k checks can run. Empty result means valid.
std::vector<std::string> validate_config(const StudyConfig& config);

// ---------------------------------------------------------------------------
// Pipeline results

struct TestCell {
    std::optional<TestResult> t;
    std::optional<TestResult> wilcoxon;
};

struct ReportRow {
    int day = 0;
    double value = 0.0;  // CAAR, or AR for the focal rows
    std::size_t n = 0;
    TestCell tests;
};

struct CategoryReport {
    SampleCategory category;
    EventCaar series;
    std::vector<ReportRow> rows;  // pre rows then post rows
};

struct ClusteringReport {
    FeatureMatrix features;
    Dendrogram dendrogram;
    ClusterAssignment assignment;
    std::vector<std::string> focal_cluster;
    std::map<std::size_t, std::vector<std::string>> focal_by_k;
};

struct FocalArRow {
    int day = 0;
    std::optional<double> ar;
    std::optional<TestResult> t;
};

struct EventReport {
    EventSpec event;
    AbnormalReturnMatrix ars;
    std::map<FeatureMode, ClusteringReport> clusterings;
    std::vector<CategoryReport> categories;
    std::vector<FocalArRow> focal_ar;
    ExclusionList excluded;
};

struct ClusterComparison {
    FeatureMode mode = FeatureMode::five_variable;
    std::size_t k = 0;
    std::string reference_event;
    std::size_t reference_size = 0;
    std::size_t post_size = 0;
    std::vector<double> focal_reference_features;  // normalised
    std::vector<double> focal_post_features;
};

struct PostClusteringReport {
    PostClusteringSpec spec;
    AbnormalReturnMatrix ars;
    std::map<FeatureMode, ClusteringReport> clusterings;
    std::vector<ClusterComparison> comparisons;
    ExclusionList excluded;
};

enum class Stage { fit, features, cluster, study };

struct RunOptions {
    Stage stage = Stage::study;
    std::vector<std::string> events;  // empty: all events
    Exec exec = Exec::parallel;
};

struct StudyResult {
    StudyConfig config;
    PricePanel panel;
    FactorSeries factors;
    ReturnSeries market;
    std::vector<std::string> universe;
    EstimationWindow estimation;
    std::vector<MarketModelFit> fits;
    ExclusionList fit_excluded;
    std::vector<EventReport> events;
    std::optional<PostClusteringReport> post;

    const EventReport* find_event(std::string_view name) const;
};

// Throws ConfigError / DataError / NumericalError naming the event,
// category or security involved.
StudyResult run_pipeline(const StudyConfig& config, const RunOptions& options = {});

// Writes every data product for `options.stage` into `dir` (created).
void write_report(const StudyResult& result, const RunOptions& options, const std::filesystem::path& dir);

}  // namespace evstudy
