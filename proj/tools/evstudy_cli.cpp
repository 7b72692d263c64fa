// evstudy: batch driver.
//
//   evstudy validate --config config/study_2018.json
//   evstudy study    --config config/study_2018.json --out out --threads 4
//
// Each run writes into <out>/<subcommand>-<YYYYMMDD>. Logs go to stderr.

#include "evstudy/errors.hpp"
#include "evstudy/log.hpp"
#include "evstudy/study.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <iostream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

using namespace evstudy;

std::string today_yyyymmdd() {
    const auto now = std::chrono::floor<std::chrono::days>(std::chrono::system_clock::now());
    const Date d(static_cast<std::int32_t>(now.time_since_epoch().count()));
    std::string iso = d.iso();
    iso.erase(std::remove(iso.begin(), iso.end(), '-'), iso.end());
    return iso;
}

struct Common {
    std::string config;
    std::string out;
    std::string run_date;
    std::vector<std::string> events;
    bool paper_literal = false;
    int threads = 0;
    bool verbose = false;
    bool quiet = false;
};

void add_common(CLI::App* sub, Common& c, bool with_outputs) {
    sub->add_option("--config", c.config, "study config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--event", c.events, "restrict to the named event (repeatable)");
    sub->add_option("--threads", c.threads, "OpenMP threads (0: runtime default)")->check(CLI::NonNegativeNumber);
    sub->add_flag("-v,--verbose", c.verbose, "debug logging");
    sub->add_flag("-q,--quiet", c.quiet, "warnings and errors only");
    if (with_outputs) {
        sub->add_option("--out", c.out, "output root (default: output_dir from the config)");
        sub->add_option("--run-date", c.run_date, "YYYYMMDD for the output directory name (default: today, UTC)");
        sub->add_flag("--paper-literal-wilcoxon", c.paper_literal,
                      "centre the signed-rank statistic at N(N-1)/4 and skip the tie correction");
    }
}

int run(const std::string& name, const Common& c, Stage stage) {
    if (c.verbose) log::set_level(log::Level::debug);
    if (c.quiet) log::set_level(log::Level::warn);
#ifdef _OPENMP
    if (c.threads > 0) omp_set_num_threads(c.threads);
#endif

    StudyConfig cfg = load_config(c.config);
    if (name == "validate") {
        const auto errors = validate_config(cfg);
        for (const auto& e : errors) log::error(e);
        if (!errors.empty()) return static_cast<int>(ExitCode::config);
        log::info("config ok");
        return 0;
    }
    if (c.paper_literal) cfg.wilcoxon = WilcoxonMode::paper_literal;

    std::string date = c.run_date.empty() ? today_yyyymmdd() : c.run_date;
    if (date.size() != 8 || date.find_first_not_of("0123456789") != std::string::npos) {
        throw ConfigError("--run-date: expected YYYYMMDD, got '" + date + "'");
    }
    const std::filesystem::path root = c.out.empty() ? cfg.output_dir : std::filesystem::path(c.out);
    const auto dir = root / (name + "-" + date);

    RunOptions opts;
    opts.stage = stage;
    opts.events = c.events;
    const auto t0 = std::chrono::steady_clock::now();
    const auto result = run_pipeline(cfg, opts);
    write_report(result, opts, dir);
    const auto ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
    log::info("wrote " + dir.string() + " in " + std::to_string(ms) + " ms");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Event-study toolkit: market models, clustering, CAAR tests"};
    app.require_subcommand(1);

    struct Sub {
        const char* name;
        const char* help;
        evstudy::Stage stage;
        bool outputs;
    };
    const Sub subs[] = {
        {"validate", "check the config and data files, report every problem", evstudy::Stage::fit, false},
        {"fit", "market-model fits only", evstudy::Stage::fit, true},
        {"features", "fits, abnormal returns and feature matrices", evstudy::Stage::features, true},
        {"cluster", "features plus dendrograms and cluster assignments", evstudy::Stage::cluster, true},
        {"study", "full pipeline: clustering, CAAR series and tests", evstudy::Stage::study, true},
    };
    Common common;
    std::vector<std::pair<CLI::App*, const Sub*>> handles;
    for (const auto& s : subs) {
        auto* sub = app.add_subcommand(s.name, s.help);
        add_common(sub, common, s.outputs);
        handles.emplace_back(sub, &s);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : static_cast<int>(evstudy::ExitCode::config);
    }

    try {
        for (const auto& [sub, s] : handles) {
            if (sub->parsed()) return run(s->name, common, s->stage);
        }
    } catch (const evstudy::ConfigError& e) {
        evstudy::log::error(e.what());
        return static_cast<int>(evstudy::ExitCode::config);
    } catch (const evstudy::DataError& e) {
        evstudy::log::error(e.what());
        return static_cast<int>(evstudy::ExitCode::data);
    } catch (const evstudy::NumericalError& e) {
        evstudy::log::error(e.what());
        return static_cast<int>(evstudy::ExitCode::numerical);
    } catch (const std::exception& e) {
        evstudy::log::error(e.what());
        return static_cast<int>(evstudy::ExitCode::data);
    }
    return 0;
}
