#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "flashfx/classify.hpp"
#include "flashfx/detect.hpp"
#include "flashfx/fleetliq.hpp"
#include "flashfx/liquidity.hpp"
#include "flashfx/nbbo.hpp"
#include "flashfx/tape.hpp"

namespace flashfx {

struct RunConfig {
    std::string trades_path;
    std::string quotes_path;
    std::vector<std::string> symbols;  // empty keeps every symbol
    TimeRange range;
    DetectorConfig detector;
    ClassifyConfig classify;
    StudyConfig study;
    std::filesystem::path out_dir = "out";
    int jobs = 1;
    std::string session;  // month label for report columns, e.g. "2008-10"
    bool nbbo_log = false;

    // Throws InvalidConfig on non-positive thresholds or an unusable layout.
    void validate() const;
};

// Reads a JSON object whose keys mirror the command-line flags
// ("min_ticks", "stub_pct", "study_window_s", ...). Throws InvalidConfig.
RunConfig load_run_config(const std::filesystem::path& path);
void apply_run_config_json(RunConfig& cfg, std::string_view json_text, const std::string& origin);

// Everything the analysis stages produce for one symbol.
struct SymbolAnalysis {
    std::string symbol;
    std::vector<CrashEvent> crashes;
    std::vector<CrashClassification> kinds;
    std::vector<std::optional<bool>> fleeting;  // nullopt when quotes do not cover the crash
    std::map<Metric, EventStudyAccumulator> study;
    std::vector<std::string> nbbo_lines;
    std::uint64_t stale_quotes = 0;
};

SymbolAnalysis analyze_symbol(const std::string& symbol, const EventStream& stream, const RunConfig& cfg);

struct RunResult {
    LoadSummary load;
    std::vector<CrashEvent> crashes;  // report order
    std::vector<CrashClassification> kinds;
    std::vector<std::optional<bool>> fleeting;
    std::map<Metric, AggregateSeries> study;
    std::vector<FeatureVector> rows;  // crashes with a fleeting label
    std::optional<LogitModel> logit;
    std::string logit_note;  // why no model was fitted
    std::vector<std::string> nbbo_lines;
    std::uint64_t stale_quotes = 0;
};

// Loads the tape, analyses symbols on cfg.jobs threads and merges the results
// in symbol order, so the outcome does not depend on the thread count.
RunResult analyze(const RunConfig& cfg);
RunResult analyze_stream(EventStream stream, const RunConfig& cfg);

// Single pass over the merged files keeping only per-venue detector state.
struct StreamDetectResult {
    LoadSummary load;
    std::vector<CrashEvent> crashes;
    std::uint64_t events = 0;
};
StreamDetectResult detect_streaming(const RunConfig& cfg);

// Detection plus NBBO maintenance over an event source, used by the
// streaming path and by throughput measurements.
class StreamingAnalyzer {
public:
    explicit StreamingAnalyzer(DetectorConfig cfg = {}) : detector_(cfg) {}

    void on_event(const Event& e);
    void on_trade(const TradeRecord& t) {
        ++events_;
        detector_.on_trade(t);
    }
    void on_quote(const QuoteRecord& q);
    std::vector<CrashEvent> finish() { return detector_.finish(); }

    std::uint64_t events() const { return events_; }
    std::size_t active_books() const { return books_.size(); }
    const NbboBook* book(const std::string& symbol) const;

private:
    StreamDetector detector_;
    std::map<std::string, NbboBook, std::less<>> books_;
    std::uint64_t events_ = 0;
};

enum class Stage : std::uint8_t { Detect, Classify, Study, FleetLiq, All };

// Writes the report files of a stage into cfg.out_dir and returns their paths.
std::vector<std::filesystem::path> write_reports(const RunResult& r, const RunConfig& cfg, Stage stage);
std::vector<std::filesystem::path> write_detect_report(const StreamDetectResult& r, const RunConfig& cfg);

}  // namespace flashfx
