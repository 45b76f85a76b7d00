#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "flashfx/log.hpp"
#include "flashfx/pipeline.hpp"
#include "flashfx/report.hpp"
#include "flashfx/simgen.hpp"

using namespace flashfx;

namespace {

// Flags as given on the command line; unset ones leave the config file or
// built-in defaults alone.
struct RunFlags {
    std::optional<std::string> config;
    std::optional<std::string> trades, quotes, symbols, out, date;
    std::optional<std::int64_t> from_ms, to_ms, max_window_ms, flicker_ms, bucket_ms;
    std::optional<int> min_ticks, jobs;
    std::optional<double> min_move_pct, stub_pct, study_window_s;
    bool nbbo_log = false;
};

void add_run_flags(CLI::App* app, RunFlags& f) {
    app->add_option("--config", f.config, "JSON file with defaults for any flag");
    app->add_option("--trades", f.trades, "trade file (.csv or .csv.gz)");
    app->add_option("--quotes", f.quotes, "quote file (.csv or .csv.gz)");
    app->add_option("--symbols", f.symbols, "comma-separated symbols to keep");
    app->add_option("--from-ms", f.from_ms, "first ms since midnight to keep");
    app->add_option("--to-ms", f.to_ms, "last ms since midnight to keep");
    app->add_option("--min-ticks", f.min_ticks, "directional ticks per crash (default 10)");
    app->add_option("--max-window-ms", f.max_window_ms, "crash window length (default 1500)");
    app->add_option("--min-move-pct", f.min_move_pct, "price move to exceed, percent (default 0.8)");
    app->add_option("--flicker-ms", f.flicker_ms, "quote bounds window before a crash (default 1000)");
    app->add_option("--stub-pct", f.stub_pct, "stub quote distance from last trade, percent (default 50)");
    app->add_option("--study-window-s", f.study_window_s, "event study half window, seconds (default 60)");
    app->add_option("--bucket-ms", f.bucket_ms, "event study bucket (default 100)");
    app->add_option("--out", f.out, "output directory (default out)");
    app->add_option("--jobs", f.jobs, "worker threads (default 1)");
    app->add_option("--date", f.date, "trading date YYYY-MM-DD; labels report month columns");
    app->add_flag("--nbbo-log", f.nbbo_log, "also write every NBBO change to nbbo.csv");
}

RunConfig build_config(const RunFlags& f) {
    RunConfig cfg = f.config ? load_run_config(*f.config) : RunConfig{};
    if (f.trades) cfg.trades_path = *f.trades;
    if (f.quotes) cfg.quotes_path = *f.quotes;
    if (f.symbols) {
        cfg.symbols.clear();
        std::string cur;
        for (char c : *f.symbols + ",") {
            if (c == ',') {
                if (!cur.empty()) cfg.symbols.push_back(cur);
                cur.clear();
            } else {
                cur += c;
            }
        }
    }
    if (f.from_ms) cfg.range.from_ms = *f.from_ms;
    if (f.to_ms) cfg.range.to_ms = *f.to_ms;
    if (f.min_ticks) cfg.detector.min_ticks = *f.min_ticks;
    if (f.max_window_ms) cfg.detector.max_window_ms = *f.max_window_ms;
    if (f.min_move_pct) cfg.detector.min_move_pct = *f.min_move_pct;
    if (f.flicker_ms) cfg.classify.flicker_ms = *f.flicker_ms;
    if (f.stub_pct) cfg.classify.stub_threshold = *f.stub_pct / 100.0;
    if (f.study_window_s) cfg.study.window_ms = static_cast<std::int64_t>(*f.study_window_s * 1000.0);
    if (f.bucket_ms) cfg.study.bucket_ms = *f.bucket_ms;
    if (f.out) cfg.out_dir = *f.out;
    if (f.jobs) cfg.jobs = *f.jobs;
    if (f.date) cfg.session = month_label(*f.date);
    if (f.nbbo_log) cfg.nbbo_log = true;
    cfg.validate();
    if (cfg.trades_path.empty() && cfg.quotes_path.empty()) {
        throw Error(ErrorCode::InvalidConfig, "at least one of --trades or --quotes is required");
    }
    return cfg;
}

void report_written(const std::vector<std::filesystem::path>& files) {
    for (const auto& p : files) std::cout << "wrote " << p.string() << '\n';
}

int run_stage(const RunFlags& flags, Stage stage) {
    const RunConfig cfg = build_config(flags);
    const RunResult r = analyze(cfg);
    std::cout << r.crashes.size() << " crashes from " << r.load.trades_kept << " trades and "
              << r.load.quotes_kept << " quotes\n";
    report_written(write_reports(r, cfg, stage));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    init_logging();
    CLI::App app{"Mini flash crash detection, classification and liquidity analysis"};
    app.require_subcommand(1);

    RunFlags detect_flags, classify_flags, study_flags, fleet_flags, all_flags;
    auto* detect = app.add_subcommand("detect", "stream the tape and write crashes.csv");
    add_run_flags(detect, detect_flags);
    auto* classify = app.add_subcommand("classify", "detect and classify crashes; writes table1.txt");
    add_run_flags(classify, classify_flags);
    auto* study = app.add_subcommand("study", "event study of spreads, quoted volume and locked/crossed quotes");
    add_run_flags(study, study_flags);
    auto* fleet = app.add_subcommand("fleetliq", "fleeting liquidity labels and the logit fit; writes table2.txt");
    add_run_flags(fleet, fleet_flags);
    auto* all = app.add_subcommand("all", "run every stage");
    all->alias("run");
    add_run_flags(all, all_flags);

    std::string spec_path, sim_out = "sim";
    std::optional<std::uint64_t> sim_seed;
    auto* simulate = app.add_subcommand("simulate", "generate a labelled tape from a scenario spec");
    simulate->add_option("--spec", spec_path, "scenario JSON")->required();
    simulate->add_option("--out", sim_out, "output directory (default sim)");
    simulate->add_option("--seed", sim_seed, "override the spec's seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*detect) {
            const RunConfig cfg = build_config(detect_flags);
            const StreamDetectResult r = detect_streaming(cfg);
            std::cout << r.crashes.size() << " crashes in " << r.events << " events\n";
            report_written(write_detect_report(r, cfg));
            return 0;
        }
        if (*classify) return run_stage(classify_flags, Stage::Classify);
        if (*study) return run_stage(study_flags, Stage::Study);
        if (*fleet) return run_stage(fleet_flags, Stage::FleetLiq);
        if (*all) return run_stage(all_flags, Stage::All);
        if (*simulate) {
            ScenarioSpec spec = load_scenario_spec(spec_path);
            if (sim_seed) spec.seed = *sim_seed;
            const ScenarioOutput out = generate_scenario(spec);
            std::cout << out.trades.size() << " trades, " << out.quotes.size() << " quotes, " << out.labels.size()
                      << " labelled crashes\n";
            report_written(write_scenario(out, sim_out));
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "flashfx: " << to_string(e.code()) << ": " << e.what() << '\n';
        return e.code() == ErrorCode::InvalidConfig ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "flashfx: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
