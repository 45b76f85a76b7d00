#include "flashfx/pipeline.hpp"

#include <atomic>
#include <exception>
#include <fstream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "flashfx/log.hpp"
#include "flashfx/report.hpp"

namespace flashfx {

namespace {

[[noreturn]] void bad_config(const std::string& msg) { throw Error(ErrorCode::InvalidConfig, msg); }

}  // namespace

void RunConfig::validate() const {
    if (detector.min_ticks <= 0) bad_config("min-ticks must be positive");
    if (detector.max_window_ms <= 0) bad_config("max-window-ms must be positive");
    if (!(detector.min_move_pct > 0.0)) bad_config("min-move-pct must be positive");
    if (classify.flicker_ms <= 0) bad_config("flicker-ms must be positive");
    if (!(classify.stub_threshold > 0.0)) bad_config("stub-pct must be positive");
    if (study.bucket_ms <= 0 || study.window_ms <= 0) bad_config("study window and bucket must be positive");
    if (study.window_ms % study.bucket_ms != 0) bad_config("study window must be a whole number of buckets");
    if (jobs <= 0) bad_config("jobs must be positive");
    if (range.from_ms > range.to_ms) bad_config("from-ms is after to-ms");
    if (!session.empty()) (void)month_label(session);
}

void apply_run_config_json(RunConfig& cfg, std::string_view text, const std::string& origin) {
    using json = nlohmann::json;
    json j;
    try {
        j = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        bad_config(origin + ": invalid JSON at byte " + std::to_string(e.byte));
    }
    if (!j.is_object()) bad_config(origin + ": config must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& key = it.key();
        const json& v = it.value();
        try {
            if (key == "trades") {
                cfg.trades_path = v.get<std::string>();
            } else if (key == "quotes") {
                cfg.quotes_path = v.get<std::string>();
            } else if (key == "symbols") {
                cfg.symbols.clear();
                if (v.is_string()) {
                    std::stringstream ss(v.get<std::string>());
                    for (std::string s; std::getline(ss, s, ',');) {
                        if (!s.empty()) cfg.symbols.push_back(s);
                    }
                } else {
                    cfg.symbols = v.get<std::vector<std::string>>();
                }
            } else if (key == "from_ms") {
                cfg.range.from_ms = v.get<std::int64_t>();
            } else if (key == "to_ms") {
                cfg.range.to_ms = v.get<std::int64_t>();
            } else if (key == "min_ticks") {
                cfg.detector.min_ticks = v.get<int>();
            } else if (key == "max_window_ms") {
                cfg.detector.max_window_ms = v.get<std::int64_t>();
            } else if (key == "min_move_pct") {
                cfg.detector.min_move_pct = v.get<double>();
            } else if (key == "flicker_ms") {
                cfg.classify.flicker_ms = v.get<std::int64_t>();
            } else if (key == "stub_pct") {
                cfg.classify.stub_threshold = v.get<double>() / 100.0;
            } else if (key == "study_window_s") {
                cfg.study.window_ms = static_cast<std::int64_t>(v.get<double>() * 1000.0);
            } else if (key == "bucket_ms") {
                cfg.study.bucket_ms = v.get<std::int64_t>();
            } else if (key == "out") {
                cfg.out_dir = v.get<std::string>();
            } else if (key == "jobs") {
                cfg.jobs = v.get<int>();
            } else if (key == "date") {
                cfg.session = month_label(v.get<std::string>());
            } else if (key == "nbbo_log") {
                cfg.nbbo_log = v.get<bool>();
            } else {
                bad_config(origin + ": unknown key '" + key + "'");
            }
        } catch (const json::exception& e) {
            bad_config(origin + ": key '" + key + "': " + e.what());
        }
    }
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    RunConfig cfg;
    apply_run_config_json(cfg, ss.str(), path.string());
    return cfg;
}

SymbolAnalysis analyze_symbol(const std::string& symbol, const EventStream& stream, const RunConfig& cfg) {
    SymbolAnalysis a;
    a.symbol = symbol;
    const QuoteTimeline timeline(stream);
    a.stale_quotes = timeline.stale_quotes();

    std::vector<TradeRecord> trades;
    StreamDetector detector(cfg.detector);
    for (const Event& e : stream) {
        if (const auto* t = std::get_if<TradeRecord>(&e)) {
            trades.push_back(*t);
            detector.on_trade(*t);
        }
    }
    a.crashes = detector.finish();

    for (Metric m : kAllMetrics) a.study.emplace(m, EventStudyAccumulator(m));
    for (CrashEvent& c : a.crashes) {
        c.session = cfg.session;
        a.kinds.push_back(classify_crash(c, timeline, trades, cfg.classify));
        try {
            a.fleeting.emplace_back(detect_fleeting_liquidity(c, timeline));
        } catch (const Error& e) {
            if (e.code() != ErrorCode::InsufficientQuoteHistory) throw;
            a.fleeting.emplace_back(std::nullopt);
        }
        for (Metric m : kAllMetrics) {
            a.study.at(m).add(event_window_series(c.start_ts, timeline, m, c.exchange, cfg.study));
        }
    }

    if (cfg.nbbo_log) {
        for (const NbboSnapshot& s : timeline.nbbo_history()) {
            a.nbbo_lines.push_back(symbol + "," + format_nbbo_line(s.ts, s.nbbo));
        }
    }
    return a;
}

namespace {

LoadOptions load_options(const RunConfig& cfg) {
    LoadOptions o;
    o.symbols.insert(cfg.symbols.begin(), cfg.symbols.end());
    o.range = cfg.range;
    return o;
}

// Runs f(i) for i in [0, n) on up to jobs threads. The first failure in index
// order is rethrown after all workers finish.
template <class F>
void parallel_for(std::size_t n, int jobs, F&& f) {
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                f(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace

RunResult analyze_stream(EventStream stream, const RunConfig& cfg) {
    cfg.validate();
    auto parts = split_by_symbol(std::move(stream));
    std::vector<SymbolAnalysis> results(parts.size());
    parallel_for(parts.size(), cfg.jobs,
                 [&](std::size_t i) { results[i] = analyze_symbol(parts[i].first, parts[i].second, cfg); });
    parts.clear();

    RunResult r;
    std::map<Metric, EventStudyAccumulator> study;
    for (Metric m : kAllMetrics) study.emplace(m, EventStudyAccumulator(m));
    for (auto& a : results) {
        for (std::size_t i = 0; i < a.crashes.size(); ++i) {
            r.crashes.push_back(std::move(a.crashes[i]));
            r.kinds.push_back(std::move(a.kinds[i]));
            r.fleeting.push_back(a.fleeting[i]);
        }
        for (auto& [m, acc] : a.study) study.at(m).merge(acc);
        for (auto& line : a.nbbo_lines) r.nbbo_lines.push_back(std::move(line));
        r.stale_quotes += a.stale_quotes;
    }
    for (const auto& [m, acc] : study) r.study.emplace(m, acc.result());

    for (std::size_t i = 0; i < r.crashes.size(); ++i) {
        if (r.fleeting[i]) r.rows.push_back(make_feature_row(r.crashes[i], r.kinds[i], *r.fleeting[i]));
    }
    if (r.rows.empty()) {
        r.logit_note = "no crashes with quote coverage";
    } else {
        try {
            r.logit = fit_logit(r.rows);
        } catch (const Error& e) {
            r.logit_note = std::string(to_string(e.code())) + ": " + e.what();
            log_warn("logit not fitted: " + r.logit_note);
        }
    }
    if (r.stale_quotes > 0) log_warn(std::to_string(r.stale_quotes) + " stale quotes ignored");
    return r;
}

RunResult analyze(const RunConfig& cfg) {
    cfg.validate();
    LoadSummary summary;
    EventStream stream = load_merged_stream(cfg.trades_path, cfg.quotes_path, load_options(cfg), &summary);
    log_info("loaded " + std::to_string(summary.trades_kept) + " trades and " +
             std::to_string(summary.quotes_kept) + " quotes");
    RunResult r = analyze_stream(std::move(stream), cfg);
    r.load = summary;
    return r;
}

void StreamingAnalyzer::on_event(const Event& e) {
    if (const auto* t = std::get_if<TradeRecord>(&e)) {
        on_trade(*t);
    } else {
        on_quote(std::get<QuoteRecord>(e));
    }
}

void StreamingAnalyzer::on_quote(const QuoteRecord& q) {
    ++events_;
    auto it = books_.find(q.symbol);
    if (it == books_.end()) {
        // Keep only a short tail of NBBO history so memory stays bounded.
        it = books_.emplace(q.symbol, NbboBook(q.symbol, 2000)).first;
    }
    it->second.apply_quote(q);
}

const NbboBook* StreamingAnalyzer::book(const std::string& symbol) const {
    auto it = books_.find(symbol);
    return it == books_.end() ? nullptr : &it->second;
}

StreamDetectResult detect_streaming(const RunConfig& cfg) {
    cfg.validate();
    MergedReader reader(cfg.trades_path, cfg.quotes_path, load_options(cfg));
    StreamingAnalyzer analyzer(cfg.detector);
    while (auto e = reader.next()) analyzer.on_event(*e);
    StreamDetectResult r;
    r.crashes = analyzer.finish();
    for (auto& c : r.crashes) c.session = cfg.session;
    r.load = reader.summary();
    r.events = analyzer.events();
    return r;
}

std::vector<std::filesystem::path> write_detect_report(const StreamDetectResult& r, const RunConfig& cfg) {
    const auto path = cfg.out_dir / "crashes.csv";
    write_text_file(path, format_crashes_csv(r.crashes));
    return {path};
}

std::vector<std::filesystem::path> write_reports(const RunResult& r, const RunConfig& cfg, Stage stage) {
    std::vector<std::filesystem::path> written;
    auto put = [&](const std::string& name, const std::string& content) {
        const auto path = cfg.out_dir / name;
        write_text_file(path, content);
        written.push_back(path);
    };
    const bool all = stage == Stage::All;
    put("crashes.csv", format_crashes_csv(r.crashes));
    if (all || stage == Stage::Classify) {
        put("classified.csv", format_classified_csv(r.crashes, r.kinds));
        put("table1.txt", format_table1(r.crashes, r.kinds));
    }
    if (all || stage == Stage::Study) {
        nlohmann::ordered_json summary = nlohmann::ordered_json::object();
        for (const auto& [m, agg] : r.study) {
            put("study_" + std::string(metric_name(m)) + ".csv", format_aggregate_csv(agg));
            summary[std::string(metric_name(m))] = nlohmann::ordered_json::parse(format_aggregate_summary_json(agg));
        }
        put("study_summary.json", summary.dump(2) + "\n");
    }
    if (all || stage == Stage::FleetLiq) {
        put("fleetliq.csv", format_fleetliq_csv(r.crashes, r.kinds, r.fleeting));
        put("logit.csv", format_logit_csv(r.logit));
        put("table2.txt", format_table2(r.crashes, r.fleeting, r.logit, r.logit_note));
    }
    if (cfg.nbbo_log) {
        std::string s = "symbol," + std::string(kNbboHeader) + "\n";
        for (const auto& l : r.nbbo_lines) {
            s += l;
            s += '\n';
        }
        put("nbbo.csv", s);
    }
    return written;
}

}  // namespace flashfx
