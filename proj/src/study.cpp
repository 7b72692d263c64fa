#include "evstudy/study.hpp"

#include "evstudy/errors.hpp"
#include "evstudy/log.hpp"
#include "evstudy/text.hpp"

#include "json.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

namespace evstudy {

namespace fs = std::filesystem;
using json = nlohmann::json;

const EventSpec* StudyConfig::find_event(std::string_view name) const {
    for (const auto& e : events) {
        if (e.name == name) return &e;
    }
    return nullptr;
}

const EventReport* StudyResult::find_event(std::string_view name) const {
    for (const auto& e : events) {
        if (e.event.name == name) return &e;
    }
    return nullptr;
}

// ---------------------------------------------------------------------------
// Config parsing

namespace {

// Collects "field: problem" messages instead of failing on the first one.
class Reader {
public:
    explicit Reader(std::vector<std::string>& errors) : errors_(errors) {}

    void error(const std::string& field, const std::string& msg) { errors_.push_back(field + ": " + msg); }

    const json* child(const json& obj, const std::string& key, const std::string& field, bool required) {
        if (!obj.is_object()) return nullptr;
        auto it = obj.find(key);
        if (it == obj.end() || it->is_null()) {
            if (required) error(field, "missing");
            return nullptr;
        }
        return &*it;
    }

    std::optional<std::string> string(const json& obj, const std::string& key, const std::string& field,
                                      bool required = true) {
        const json* v = child(obj, key, field, required);
        if (!v) return std::nullopt;
        if (!v->is_string()) {
            error(field, "expected a string");
            return std::nullopt;
        }
        return v->get<std::string>();
    }

    std::optional<long long> integer(const json& obj, const std::string& key, const std::string& field,
                                     bool required = true) {
        const json* v = child(obj, key, field, required);
        if (!v) return std::nullopt;
        if (!v->is_number_integer()) {
            error(field, "expected an integer");
            return std::nullopt;
        }
        return v->get<long long>();
    }

    std::optional<double> number(const json& obj, const std::string& key, const std::string& field,
                                 bool required = true) {
        const json* v = child(obj, key, field, required);
        if (!v) return std::nullopt;
        if (!v->is_number()) {
            error(field, "expected a number");
            return std::nullopt;
        }
        return v->get<double>();
    }

    std::optional<DayRange> range(const json& obj, const std::string& key, const std::string& field) {
        const json* v = child(obj, key, field, false);
        if (!v) return std::nullopt;
        if (!v->is_array() || v->size() != 2 || !(*v)[0].is_number_integer() || !(*v)[1].is_number_integer()) {
            error(field, "expected [start, end] integers");
            return std::nullopt;
        }
        return DayRange{(*v)[0].get<int>(), (*v)[1].get<int>()};
    }

private:
    std::vector<std::string>& errors_;
};

fs::path resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    return path.is_absolute() ? path : (base / path).lexically_normal();
}

std::optional<WindowSide> parse_side(std::string_view s) {
    if (s == "before") return WindowSide::before;
    if (s == "after") return WindowSide::after;
    return std::nullopt;
}

std::optional<FeatureMode> parse_mode(std::string_view s) {
    if (s == "four_variable") return FeatureMode::four_variable;
    if (s == "five_variable") return FeatureMode::five_variable;
    return std::nullopt;
}

void parse_events(const json& root, Reader& rd, StudyConfig& cfg) {
    const json* events = rd.child(root, "events", "events", true);
    if (!events) return;
    if (!events->is_array()) {
        rd.error("events", "expected an array");
        return;
    }
    for (std::size_t i = 0; i < events->size(); ++i) {
        const json& ev = (*events)[i];
        const std::string field = "events[" + std::to_string(i) + "]";
        if (!ev.is_object()) {
            rd.error(field, "expected an object");
            continue;
        }
        EventSpec spec;
        if (auto name = rd.string(ev, "name", field + ".name")) spec.name = *name;
        if (auto date = rd.string(ev, "date", field + ".date")) {
            try {
                spec.event_date = Date::parse_iso(*date);
            } catch (const DataError& e) {
                rd.error(field + ".date", e.what());
            }
        }
        if (auto r = rd.range(ev, "pre_window", field + ".pre_window")) spec.pre_window = *r;
        if (auto r = rd.range(ev, "post_window", field + ".post_window")) spec.post_window = *r;
        spec.feature_window.anchor_event = spec.event_date;
        if (const json* fw = rd.child(ev, "feature_window", field + ".feature_window", false)) {
            if (auto len = rd.integer(*fw, "length", field + ".feature_window.length", false)) {
                spec.feature_window.length = static_cast<int>(*len);
            }
            if (auto side = rd.string(*fw, "side", field + ".feature_window.side", false)) {
                if (auto s = parse_side(*side)) {
                    spec.feature_window.side = *s;
                } else {
                    rd.error(field + ".feature_window.side", "expected 'before' or 'after', got '" + *side + "'");
                }
            }
        }
        cfg.events.push_back(std::move(spec));
    }
}

void parse_clustering(const json& root, Reader& rd, StudyConfig& cfg) {
    const json* c = rd.child(root, "clustering", "clustering", false);
    if (!c) return;
    auto& cl = cfg.clustering;
    if (auto m = rd.string(*c, "metric", "clustering.metric", false)) {
        try {
            cl.metric.kind = parse_metric_kind(*m);
        } catch (const ConfigError& e) {
            rd.error("clustering.metric", e.what());
        }
    }
    if (auto r = rd.number(*c, "minkowski_r", "clustering.minkowski_r", false)) cl.metric.r = *r;
    if (auto l = rd.string(*c, "linkage", "clustering.linkage", false)) {
        try {
            cl.linkage = parse_linkage(*l);
        } catch (const ConfigError& e) {
            rd.error("clustering.linkage", e.what());
        }
    }
    if (auto k = rd.integer(*c, "k", "clustering.k", false)) {
        if (*k < 1) {
            rd.error("clustering.k", "must be >= 1");
        } else {
            cl.k = static_cast<std::size_t>(*k);
        }
    }
    if (const json* modes = rd.child(*c, "modes", "clustering.modes", false)) {
        cl.modes.clear();
        if (!modes->is_array()) {
            rd.error("clustering.modes", "expected an array");
        } else {
            for (const auto& m : *modes) {
                auto mode = m.is_string() ? parse_mode(m.get<std::string>()) : std::nullopt;
                if (!mode) {
                    rd.error("clustering.modes", "expected 'four_variable' or 'five_variable'");
                } else if (std::find(cl.modes.begin(), cl.modes.end(), *mode) == cl.modes.end()) {
                    cl.modes.push_back(*mode);
                }
            }
        }
    }
    if (const json* ks = rd.child(*c, "report_k", "clustering.report_k", false)) {
        cl.report_k.clear();
        if (!ks->is_array()) {
            rd.error("clustering.report_k", "expected an array");
        } else {
            for (const auto& k : *ks) {
                if (!k.is_number_integer() || k.get<long long>() < 1) {
                    rd.error("clustering.report_k", "entries must be integers >= 1");
                } else {
                    cl.report_k.push_back(k.get<std::size_t>());
                }
            }
            std::sort(cl.report_k.begin(), cl.report_k.end());
            cl.report_k.erase(std::unique(cl.report_k.begin(), cl.report_k.end()), cl.report_k.end());
        }
    }
}

}  // namespace

StudyConfig parse_config(std::string_view json_text, const fs::path& base_dir) {
    json root;
    try {
        root = json::parse(json_text.begin(), json_text.end(), nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!root.is_object()) throw ConfigError("config: top level must be an object");

    StudyConfig cfg;
    Reader rd(cfg.parse_errors);

    if (const json* data = rd.child(root, "data", "data", true)) {
        if (auto p = rd.string(*data, "prices", "data.prices")) cfg.prices_path = resolve(base_dir, *p);
        if (auto p = rd.string(*data, "factors", "data.factors")) cfg.factors_path = resolve(base_dir, *p);
    }
    if (auto s = rd.string(root, "market_index", "market_index")) cfg.market_index = *s;
    if (const json* focal = rd.child(root, "focal", "focal", true)) {
        if (focal->is_string()) {
            cfg.focal = focal->get<std::string>();
        } else {
            rd.error("focal", "exactly one focal ticker (a string) is required");
        }
    }
    if (const json* u = rd.child(root, "universe", "universe", false)) {
        if (!u->is_array()) {
            rd.error("universe", "expected an array of tickers");
        } else {
            for (const auto& t : *u) {
                if (!t.is_string()) {
                    rd.error("universe", "expected an array of tickers");
                    break;
                }
                cfg.universe.push_back(t.get<std::string>());
            }
        }
    }

    parse_events(root, rd, cfg);

    if (const json* est = rd.child(root, "estimation_window", "estimation_window", true)) {
        if (auto a = rd.string(*est, "anchor_event", "estimation_window.anchor_event")) cfg.estimation_anchor = *a;
        if (auto s = rd.integer(*est, "start", "estimation_window.start", false)) cfg.estimation_start = static_cast<int>(*s);
        if (auto e = rd.integer(*est, "end", "estimation_window.end", false)) cfg.estimation_end = static_cast<int>(*e);
    }

    if (const json* pc = rd.child(root, "post_event_clustering", "post_event_clustering", false)) {
        PostClusteringSpec spec;
        if (auto a = rd.string(*pc, "anchor_event", "post_event_clustering.anchor_event")) spec.anchor_event = *a;
        if (auto len = rd.integer(*pc, "length", "post_event_clustering.length", false)) spec.length = static_cast<int>(*len);
        if (auto side = rd.string(*pc, "side", "post_event_clustering.side", false)) {
            if (auto s = parse_side(*side)) {
                spec.side = *s;
            } else {
                rd.error("post_event_clustering.side", "expected 'before' or 'after'");
            }
        }
        cfg.post_clustering = spec;
    }

    parse_clustering(root, rd, cfg);

    if (const json* inf = rd.child(root, "inference", "inference", false)) {
        if (auto w = rd.string(*inf, "wilcoxon", "inference.wilcoxon", false)) {
            if (*w == "standard") {
                cfg.wilcoxon = WilcoxonMode::standard;
            } else if (*w == "paper_literal") {
                cfg.wilcoxon = WilcoxonMode::paper_literal;
            } else {
                rd.error("inference.wilcoxon", "expected 'standard' or 'paper_literal'");
            }
        }
        if (auto m = rd.string(*inf, "pre_window_mode", "inference.pre_window_mode", false)) {
            if (*m == "accumulated") {
                cfg.pre_window_mode = PreWindowMode::accumulated;
            } else if (*m == "per_day") {
                cfg.pre_window_mode = PreWindowMode::per_day;
            } else {
                rd.error("inference.pre_window_mode", "expected 'accumulated' or 'per_day'");
            }
        }
    }

    if (auto out = rd.string(root, "output_dir", "output_dir", false)) {
        cfg.output_dir = resolve(base_dir, *out);
    } else {
        cfg.output_dir = base_dir / "out";
    }
    return cfg;
}

StudyConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    const auto base = path.has_parent_path() ? path.parent_path() : fs::path(".");
    return parse_config(ss.str(), base);
}

// ---------------------------------------------------------------------------
// Validation

namespace {

void check_window_in_calendar(const TradingCalendar& cal, Date event_date, int first, int last,
                              const std::string& field, std::vector<std::string>& errors) {
    try {
        relative_position(cal, event_date, first);
        relative_position(cal, event_date, last);
    } catch (const DataError& e) {
        errors.push_back(field + ": window [" + std::to_string(first) + ", " + std::to_string(last) +
                         "] not inside the price calendar (" + e.what() + ")");
    }
}

}  // namespace

std::vector<std::string> validate_config(const StudyConfig& cfg) {
    std::vector<std::string> errors = cfg.parse_errors;
    auto err = [&](const std::string& field, const std::string& msg) { errors.push_back(field + ": " + msg); };

    const bool prices_ok = !cfg.prices_path.empty() && fs::is_regular_file(cfg.prices_path);
    const bool factors_ok = !cfg.factors_path.empty() && fs::is_regular_file(cfg.factors_path);
    if (!cfg.prices_path.empty() && !prices_ok) err("data.prices", "file not found: " + cfg.prices_path.string());
    if (!cfg.factors_path.empty() && !factors_ok) err("data.factors", "file not found: " + cfg.factors_path.string());
    if (cfg.market_index.empty()) err("market_index", "must be a non-empty ticker");
    if (cfg.focal.empty()) err("focal", "must be a non-empty ticker");
    if (!cfg.focal.empty() && cfg.focal == cfg.market_index) err("focal", "must differ from market_index");
    if (!cfg.universe.empty()) {
        std::set<std::string> seen;
        for (const auto& t : cfg.universe) {
            if (!seen.insert(t).second) err("universe", "duplicate ticker '" + t + "'");
            if (t == cfg.market_index) err("universe", "contains the market index '" + t + "'");
        }
        if (!cfg.focal.empty() && !seen.count(cfg.focal)) err("universe", "does not contain focal '" + cfg.focal + "'");
    }

    std::set<std::string> names;
    for (std::size_t i = 0; i < cfg.events.size(); ++i) {
        const auto& e = cfg.events[i];
        const std::string field = "events[" + std::to_string(i) + "]";
        if (e.name.empty()) continue;  // already reported as missing
        if (!names.insert(e.name).second) err(field + ".name", "duplicate event name '" + e.name + "'");
        if (e.event_date.is_weekend()) err(field + ".date", e.event_date.iso() + " falls on a weekend");
        try {
            e.validate();
        } catch (const ConfigError& ex) {
            err(field, ex.what());
        }
    }
    if (cfg.events.empty() && std::none_of(cfg.parse_errors.begin(), cfg.parse_errors.end(),
                                           [](const std::string& s) { return s.rfind("events", 0) == 0; })) {
        err("events", "at least one event is required");
    }

    if (!cfg.estimation_anchor.empty() && !cfg.find_event(cfg.estimation_anchor)) {
        err("estimation_window.anchor_event", "unknown event '" + cfg.estimation_anchor + "'");
    }
    if (!(cfg.estimation_start < cfg.estimation_end && cfg.estimation_end <= -1)) {
        err("estimation_window", "must satisfy start < end <= -1");
    } else if (static_cast<std::size_t>(cfg.estimation_end - cfg.estimation_start + 1) < kMinEstimationObservations) {
        err("estimation_window", "needs at least " + std::to_string(kMinEstimationObservations) + " days");
    }

    if (cfg.post_clustering) {
        if (!cfg.post_clustering->anchor_event.empty() && !cfg.find_event(cfg.post_clustering->anchor_event)) {
            err("post_event_clustering.anchor_event", "unknown event '" + cfg.post_clustering->anchor_event + "'");
        }
        if (cfg.post_clustering->length < 2) err("post_event_clustering.length", "must be >= 2");
    }

    const auto& cl = cfg.clustering;
    try {
        cl.metric.validate();
    } catch (const ConfigError& e) {
        err("clustering.minkowski_r", e.what());
    }
    if (cl.linkage == Linkage::ward && cl.metric.kind != MetricKind::squared_euclidean) {
        err("clustering.linkage", "ward linkage requires the squared_euclidean metric");
    }
    if (cl.modes.empty()) err("clustering.modes", "at least one mode is required");

    if (!prices_ok || cfg.market_index.empty()) return errors;

    // Data-dependent checks.
    PricePanel panel;
    try {
        panel = load_panel(cfg.prices_path, cfg.market_index);
    } catch (const std::exception& e) {
        err("data.prices", e.what());
        return errors;
    }
    std::vector<std::string> universe = cfg.universe;
    if (universe.empty()) {
        for (auto& t : panel.tickers()) {
            if (t != cfg.market_index) universe.push_back(t);
        }
    }
    for (const auto& t : universe) {
        if (!panel.find(t)) err("universe", "ticker '" + t + "' not in the price panel");
    }
    if (!cfg.focal.empty() && !panel.find(cfg.focal)) err("focal", "ticker '" + cfg.focal + "' not in the price panel");
    if (cl.k > universe.size()) {
        err("clustering.k", "k = " + std::to_string(cl.k) + " exceeds the universe size " +
                                std::to_string(universe.size()));
    }

    for (std::size_t i = 0; i < cfg.events.size(); ++i) {
        const auto& e = cfg.events[i];
        const std::string field = "events[" + std::to_string(i) + "]";
        if (e.name.empty() || e.event_date.is_weekend()) continue;
        if (!panel.calendar.contains(e.event_date)) {
            err(field + ".date", e.event_date.iso() + " is not a trading day");
            continue;
        }
        check_window_in_calendar(panel.calendar, e.event_date, e.first_day(), e.last_day(), field, errors);
        if (e.name == cfg.estimation_anchor) {
            check_window_in_calendar(panel.calendar, e.event_date, cfg.estimation_start - 1, cfg.estimation_end,
                                     "estimation_window", errors);
        }
        if (cfg.post_clustering && e.name == cfg.post_clustering->anchor_event) {
            const int first = cfg.post_clustering->side == WindowSide::before ? -cfg.post_clustering->length - 1 : 0;
            const int last = cfg.post_clustering->side == WindowSide::before ? -1 : cfg.post_clustering->length;
            check_window_in_calendar(panel.calendar, e.event_date, first, last, "post_event_clustering", errors);
        }
    }

    if (factors_ok) {
        try {
            load_factors(cfg.factors_path, panel.calendar);
        } catch (const std::exception& e) {
            err("data.factors", e.what());
        }
    }
    return errors;
}

// ---------------------------------------------------------------------------
// Pipeline

namespace {

std::string category_name(FeatureMode mode) {
    return mode == FeatureMode::four_variable ? "clustered_4var" : "clustered_5var";
}

CategoryKind category_kind(FeatureMode mode) {
    return mode == FeatureMode::four_variable ? CategoryKind::clustered_4var : CategoryKind::clustered_5var;
}

// Undefined statistics (N < 2, zero variance) become NA in the report.
template <class F>
std::optional<TestResult> guarded_test(F&& f, const std::string& where) {
    try {
        return f();
    } catch (const NumericalError& e) {
        log::warn(where + ": " + e.what() + "; reported as NA");
        return std::nullopt;
    }
}

ClusteringReport cluster_features(const PricePanel& panel, const FactorSeries& factors,
                                  const AbnormalReturnMatrix& ars, const FeatureWindow& window, FeatureMode mode,
                                  const std::vector<std::string>& universe, const StudyConfig& cfg, Stage stage,
                                  Exec exec, const std::string& where) {
    ClusteringReport r;
    r.features = build_feature_matrix(panel, factors, ars, window, mode, universe, exec);
    if (stage == Stage::features || stage == Stage::fit) return r;

    const auto tickers = r.features.tickers();
    if (std::find(tickers.begin(), tickers.end(), cfg.focal) == tickers.end()) {
        throw DataError(where + ": focal security '" + cfg.focal + "' was excluded from the feature matrix");
    }
    if (r.features.size() < 2) {
        throw NumericalError(where + ": fewer than two securities left to cluster");
    }
    if (cfg.clustering.k > r.features.size()) {
        throw ConfigError(where + ": k = " + std::to_string(cfg.clustering.k) + " exceeds the " +
                          std::to_string(r.features.size()) + " clusterable securities");
    }
    r.dendrogram = agglomerate(r.features, cfg.clustering.metric, cfg.clustering.linkage, exec);
    r.assignment = cut(r.dendrogram, cfg.clustering.k, cfg.focal);
    r.focal_cluster = focal_subsample(r.assignment, cfg.focal);
    for (auto k : cfg.clustering.report_k) {
        if (k <= r.dendrogram.n_leaves) r.focal_by_k[k] = focal_subsample(cut(r.dendrogram, k, cfg.focal), cfg.focal);
    }
    return r;
}

void add_exclusions(ExclusionList& into, std::set<std::pair<std::string, std::string>>& seen,
                    const ExclusionList& from, const std::string& scope) {
    for (const auto& e : from) {
        if (seen.emplace(e.ticker, e.reason).second) into.push_back({e.ticker, e.reason, scope + ": " + e.detail});
    }
}

CategoryReport run_category(const AbnormalReturnMatrix& ars, SampleCategory category, const EventSpec& event,
                            const StudyConfig& cfg) {
    CategoryReport r;
    r.series = caar_series(ars, category, event, cfg.pre_window_mode);
    const std::string where = "event '" + event.name + "', category '" + category.name + "'";
    for (const auto* part : {&r.series.pre, &r.series.post}) {
        for (const auto& p : *part) {
            ReportRow row;
            row.day = p.day;
            row.value = p.caar;
            row.n = p.n();
            const std::string at = where + ", day " + std::to_string(p.day);
            row.tests.t = guarded_test([&] { return t_caar(p.cars); }, at + " t-test");
            row.tests.wilcoxon = guarded_test([&] { return wilcoxon_signed_rank(p.cars, cfg.wilcoxon); },
                                              at + " signed-rank test");
            r.rows.push_back(std::move(row));
        }
    }
    r.category = std::move(category);
    return r;
}

}  // namespace

StudyResult run_pipeline(const StudyConfig& config, const RunOptions& options) {
    // A present but malformed data file is a data error, not a config error.
    if (fs::is_regular_file(config.prices_path) && !config.market_index.empty()) {
        const auto panel = load_panel(config.prices_path, config.market_index);
        if (fs::is_regular_file(config.factors_path)) load_factors(config.factors_path, panel.calendar);
    }
    if (auto errors = validate_config(config); !errors.empty()) {
        std::string msg = "invalid config:";
        for (const auto& e : errors) msg += "\n  " + e;
        throw ConfigError(msg);
    }
    for (const auto& name : options.events) {
        if (!config.find_event(name)) throw ConfigError("--event: unknown event '" + name + "'");
    }
    auto selected = [&](const std::string& name) {
        return options.events.empty() ||
               std::find(options.events.begin(), options.events.end(), name) != options.events.end();
    };

    StudyResult res;
    res.config = config;
    const auto& cfg = res.config;
    res.panel = load_panel(cfg.prices_path, cfg.market_index);
    res.factors = load_factors(cfg.factors_path, res.panel.calendar);
    log::info("loaded " + std::to_string(res.panel.securities.size()) + " securities over " +
              std::to_string(res.panel.calendar.size()) + " trading days");

    res.universe = cfg.universe;
    if (res.universe.empty()) {
        for (auto& t : res.panel.tickers()) {
            if (t != cfg.market_index) res.universe.push_back(t);
        }
    }
    std::sort(res.universe.begin(), res.universe.end());

    const auto returns = log_returns(res.panel);
    for (const auto& r : returns) {
        if (r.ticker == cfg.market_index) res.market = r;
    }

    res.estimation = {cfg.find_event(cfg.estimation_anchor)->event_date, cfg.estimation_start, cfg.estimation_end};
    auto batch = fit_market_models(returns, res.market, res.panel.calendar, res.estimation, res.universe,
                                   options.exec);
    res.fits = std::move(batch.fits);
    res.fit_excluded = std::move(batch.excluded);
    for (const auto& e : res.fit_excluded) log::warn("market model: dropped " + e.ticker + " (" + e.detail + ")");
    log::info("fitted " + std::to_string(res.fits.size()) + " market models");
    if (options.stage == Stage::fit) return res;

    std::vector<std::string> fitted;
    for (const auto& f : res.fits) fitted.push_back(f.ticker);
    const auto focal_fit =
        std::find_if(res.fits.begin(), res.fits.end(), [&](const auto& f) { return f.ticker == cfg.focal; });
    if (focal_fit == res.fits.end()) {
        throw DataError("focal security '" + cfg.focal + "' has no market-model fit");
    }
    const ReturnSeries* focal_returns = nullptr;
    for (const auto& r : returns) {
        if (r.ticker == cfg.focal) focal_returns = &r;
    }
    const auto focal_est_ars =
        estimation_abnormal_returns(*focal_fit, *focal_returns, res.market, res.panel.calendar, res.estimation);

    for (const auto& event : cfg.events) {
        if (!selected(event.name)) continue;
        EventReport er;
        er.event = event;
        er.ars = abnormal_returns(res.panel, res.market, res.fits, event.event_date, event.first_day(),
                                  event.last_day());
        std::set<std::pair<std::string, std::string>> seen;

        for (auto mode : cfg.clustering.modes) {
            const std::string where = "event '" + event.name + "', " + std::string(to_string(mode));
            auto cr = cluster_features(res.panel, res.factors, er.ars, event.feature_window, mode, fitted, cfg,
                                       options.stage, options.exec, where);
            add_exclusions(er.excluded, seen, cr.features.excluded, "features/" + std::string(to_string(mode)));
            er.clusterings.emplace(mode, std::move(cr));
        }

        if (options.stage == Stage::study) {
            er.categories.push_back(run_category(er.ars, {"all", CategoryKind::all, fitted}, event, cfg));
            for (const auto& [mode, cr] : er.clusterings) {
                SampleCategory cat{category_name(mode), category_kind(mode), cr.focal_cluster};
                cat.validate(fitted, cfg.focal);
                er.categories.push_back(run_category(er.ars, std::move(cat), event, cfg));
            }
            for (const auto& c : er.categories) add_exclusions(er.excluded, seen, c.series.excluded, c.category.name);

            const auto row = *er.ars.row_of(cfg.focal);
            for (int day = event.pre_window.start; day <= event.post_window.end; ++day) {
                if (day > event.pre_window.end && day < event.post_window.start) continue;
                FocalArRow fr;
                fr.day = day;
                fr.ar = er.ars.at(row, day);
                if (fr.ar) {
                    fr.t = guarded_test([&] { return t_ar(*fr.ar, focal_est_ars); },
                                        "event '" + event.name + "', " + cfg.focal + " AR day " + std::to_string(day));
                }
                er.focal_ar.push_back(fr);
            }
        }
        std::sort(er.excluded.begin(), er.excluded.end());
        log::info("event '" + event.name + "' done");
        res.events.push_back(std::move(er));
    }

    if (cfg.post_clustering && options.stage != Stage::features && selected(cfg.post_clustering->anchor_event)) {
        const auto& spec = *cfg.post_clustering;
        const auto* anchor = cfg.find_event(spec.anchor_event);
        PostClusteringReport pr;
        pr.spec = spec;
        FeatureWindow window{anchor->event_date, spec.length, spec.side};
        pr.ars = abnormal_returns(res.panel, res.market, res.fits, anchor->event_date, window.first_day(),
                                  window.last_day());
        std::set<std::pair<std::string, std::string>> seen;
        for (auto mode : cfg.clustering.modes) {
            const std::string where = "post-event clustering after '" + spec.anchor_event + "', " +
                                      std::string(to_string(mode));
            auto cr = cluster_features(res.panel, res.factors, pr.ars, window, mode, fitted, cfg, options.stage,
                                       options.exec, where);
            add_exclusions(pr.excluded, seen, cr.features.excluded, "features/" + std::string(to_string(mode)));
            pr.clusterings.emplace(mode, std::move(cr));
        }
        std::sort(pr.excluded.begin(), pr.excluded.end());

        // Focal-cluster size against the first event's clustering at the same k.
        if (!res.events.empty() && options.stage != Stage::fit) {
            const auto& ref = res.events.front();
            std::set<std::size_t> ks(cfg.clustering.report_k.begin(), cfg.clustering.report_k.end());
            ks.insert(cfg.clustering.k);
            for (const auto& [mode, post] : pr.clusterings) {
                auto it = ref.clusterings.find(mode);
                if (it == ref.clusterings.end()) continue;
                const auto& pre = it->second;
                auto focal_row = [&](const FeatureMatrix& m) {
                    const auto t = m.tickers();
                    const auto i = static_cast<std::size_t>(std::find(t.begin(), t.end(), cfg.focal) - t.begin());
                    const auto r = m.normalized_row(i);
                    return std::vector<double>(r.begin(), r.end());
                };
                for (auto k : ks) {
                    if (k > pre.dendrogram.n_leaves || k > post.dendrogram.n_leaves) continue;
                    ClusterComparison c;
                    c.mode = mode;
                    c.k = k;
                    c.reference_event = ref.event.name;
                    c.reference_size = focal_subsample(cut(pre.dendrogram, k, cfg.focal), cfg.focal).size();
                    c.post_size = focal_subsample(cut(post.dendrogram, k, cfg.focal), cfg.focal).size();
                    c.focal_reference_features = focal_row(pre.features);
                    c.focal_post_features = focal_row(post.features);
                    pr.comparisons.push_back(std::move(c));
                }
            }
        }
        res.post = std::move(pr);
    }
    return res;
}

// ---------------------------------------------------------------------------
// Report writing

namespace {

std::ofstream open_out(const fs::path& path) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    return out;
}

std::string stat_cell(const std::optional<TestResult>& t) { return t ? text::shortest(t->statistic) : "NA"; }
std::string stars_cell(const std::optional<TestResult>& t) { return t ? std::string(stars(t->significance)) : "NA"; }

std::string join(const std::vector<std::string>& v, char sep) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += sep;
        s += v[i];
    }
    return s;
}

void write_clusterings(const fs::path& dir, const std::map<FeatureMode, ClusteringReport>& clusterings,
                       Stage stage) {
    for (const auto& [mode, cr] : clusterings) {
        const std::string m(to_string(mode));
        {
            auto out = open_out(dir / ("features_" + m + ".csv"));
            write_features_csv(out, cr.features);
        }
        if (stage == Stage::features) continue;
        {
            auto out = open_out(dir / ("dendrogram_" + m + ".json"));
            write_dendrogram_json(out, cr.dendrogram);
        }
        {
            auto out = open_out(dir / ("assignment_" + m + ".csv"));
            write_assignment_csv(out, cr.assignment);
        }
    }
    if (stage == Stage::features) return;
    auto out = open_out(dir / "focal_membership.csv");
    out << "mode,k,size,members\n";
    for (const auto& [mode, cr] : clusterings) {
        for (const auto& [k, members] : cr.focal_by_k) {
            out << to_string(mode) << ',' << k << ',' << members.size() << ',' << join(members, ';') << '\n';
        }
    }
}

}  // namespace

void write_report(const StudyResult& res, const RunOptions& options, const fs::path& dir) {
    fs::create_directories(dir);
    {
        auto out = open_out(dir / "fits.csv");
        write_fits_csv(out, res.fits);
    }
    {
        auto out = open_out(dir / "exclusions.csv");
        out << "event,ticker,reason,detail\n";
        auto row = [&](const std::string& event, const Exclusion& e) {
            out << event << ',' << e.ticker << ',' << e.reason << ",\"" << e.detail << "\"\n";
        };
        for (const auto& e : res.fit_excluded) row("estimation", e);
        for (const auto& ev : res.events) {
            for (const auto& e : ev.excluded) row(ev.event.name, e);
        }
        if (res.post) {
            for (const auto& e : res.post->excluded) row("post_" + res.post->spec.anchor_event, e);
        }
    }
    if (options.stage == Stage::fit) return;

    for (const auto& ev : res.events) {
        write_clusterings(dir / "events" / ev.event.name, ev.clusterings, options.stage);
    }
    if (res.post && options.stage != Stage::features) {
        const auto pdir = dir / ("post_" + res.post->spec.anchor_event);
        write_clusterings(pdir, res.post->clusterings, options.stage);
        auto out = open_out(pdir / "cluster_comparison.csv");
        out << "mode,k,reference_event,reference_focal_size,post_focal_size,strictly_smaller";
        for (const auto& n : kFeatureNames) out << ",ref_" << n << ",post_" << n;
        out << '\n';
        for (const auto& c : res.post->comparisons) {
            out << to_string(c.mode) << ',' << c.k << ',' << c.reference_event << ',' << c.reference_size << ','
                << c.post_size << ',' << (c.post_size < c.reference_size ? "yes" : "no");
            for (std::size_t i = 0; i < kFeatureNames.size(); ++i) {
                out << ',' << (i < c.focal_reference_features.size() ? text::shortest(c.focal_reference_features[i]) : "")
                    << ',' << (i < c.focal_post_features.size() ? text::shortest(c.focal_post_features[i]) : "");
            }
            out << '\n';
        }
    }
    if (options.stage != Stage::study) return;

    auto caar_out = open_out(dir / "caar.csv");
    write_caar_csv_header(caar_out);
    auto report = open_out(dir / "report.csv");
    report << "event,category,relative_day,caar_or_ar,t_stat,t_stars,wilcoxon_z,wilcoxon_stars\n";
    for (const auto& ev : res.events) {
        for (const auto& c : ev.categories) {
            write_caar_csv_rows(caar_out, ev.event.name, c.category.name, c.series);
            {
                auto plot = open_out(dir / "events" / ev.event.name / ("plot_" + c.category.name + ".csv"));
                write_caar_plot(plot, c.series);
            }
            for (const auto& r : c.rows) {
                report << ev.event.name << ',' << c.category.name << ',' << r.day << ',' << text::shortest(r.value)
                       << ',' << stat_cell(r.tests.t) << ',' << stars_cell(r.tests.t) << ','
                       << stat_cell(r.tests.wilcoxon) << ',' << stars_cell(r.tests.wilcoxon) << '\n';
            }
        }
        // Single-security rows: no cross-section to rank, so no signed-rank test.
        for (const auto& r : ev.focal_ar) {
            report << ev.event.name << ",focal_" << res.config.focal << ',' << r.day << ','
                   << (r.ar ? text::shortest(*r.ar) : "NA") << ',' << stat_cell(r.t) << ',' << stars_cell(r.t)
                   << ",NA,NA\n";
        }
        auto cats = open_out(dir / "events" / ev.event.name / "categories.csv");
        cats << "category,ticker\n";
        for (const auto& c : ev.categories) {
            for (const auto& t : c.category.tickers) cats << c.category.name << ',' << t << '\n';
        }
    }
}

}  // namespace evstudy
