#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flashfx/exchange.hpp"
#include "flashfx/price.hpp"
#include "flashfx/tape.hpp"

namespace flashfx {

enum class TickDirection : std::uint8_t { Zero, Up, Down };

constexpr TickDirection tick_direction(Price prev, Price cur) {
    if (cur > prev) return TickDirection::Up;
    if (cur < prev) return TickDirection::Down;
    return TickDirection::Zero;
}

enum class CrashDirection : std::uint8_t { Down, Up };

std::string_view to_string(CrashDirection d);

struct DetectorConfig {
    int min_ticks = 10;
    std::int64_t max_window_ms = 1500;
    double min_move_pct = 0.8;  // strict: |move| must exceed it
};

struct CrashEvent {
    std::string symbol;
    ExchangeId exchange = ExchangeId::Other;
    CrashDirection direction = CrashDirection::Down;
    std::vector<TradeRecord> trades;
    std::int64_t start_ts = 0;
    std::int64_t end_ts = 0;
    int tick_count = 0;
    double pct_change = 0.0;  // signed, first to last constituent price
    std::int64_t duration_ms = 0;
    std::int64_t total_volume = 0;
    int n_trades = 0;
    int iso_trades = 0;
    double iso_fraction = 0.0;
    bool truncated = false;  // still extendable when the tape ended
    std::string session;     // calendar label used for monthly report buckets

    std::uint64_t first_seq() const { return trades.empty() ? 0 : trades.front().seq; }
};

// Builds a crash from its constituent trades and fills the derived fields.
CrashEvent make_crash(std::vector<TradeRecord> trades, CrashDirection direction, bool truncated);

// Streaming detector for one (symbol, exchange) trade sequence.
//
// A down crash is a window of consecutive trades containing no up tick, with
// at least min_ticks down ticks, a first-to-last span of at most
// max_window_ms and a drop strictly greater than min_move_pct. Zero ticks
// neither count nor break a window. Windows are selected greedily: the
// earliest trade that starts any qualifying window opens a crash, which
// extends to the last trade that still qualifies with that start; the search
// resumes after it. Up crashes are the mirror image, tracked independently.
class CrashDetector {
public:
    explicit CrashDetector(DetectorConfig config = {});

    // Trades must arrive in ts order. Completed crashes are appended to out.
    void on_trade(const TradeRecord& t, std::vector<CrashEvent>& out);
    // Emits runs that still qualify at end of tape (tagged truncated).
    void finish(std::vector<CrashEvent>& out);

private:
    struct Entry {
        TradeRecord trade;
        std::int64_t directional;  // directional ticks from the run origin to this trade
    };

    class Run {
    public:
        Run(CrashDirection dir, const DetectorConfig& cfg, std::int64_t move_micro)
            : dir_(dir), cfg_(cfg), move_micro_(move_micro) {}

        void on_trade(const TradeRecord& t, TickDirection tick, std::vector<CrashEvent>& out);
        void finish(std::vector<CrashEvent>& out);

    private:
        bool qualifies(const Entry& start, const Entry& end) const;
        void emit(std::vector<CrashEvent>& out, bool truncated);
        void restart(const TradeRecord& t);

        CrashDirection dir_;
        DetectorConfig cfg_;
        std::int64_t move_micro_;
        std::deque<Entry> buf_;
        bool pending_ = false;  // buf_.front() opens a qualifying window
    };

    DetectorConfig config_;
    std::int64_t move_micro_;
    std::optional<Price> last_price_;
    Run down_;
    Run up_;
};

// Batch convenience over one (symbol, exchange) sequence; results ordered by
// first trade, down before up on ties.
std::vector<CrashEvent> detect_crashes(std::span<const TradeRecord> trades,
                                       const DetectorConfig& config = {});

// Routes a multi-venue, multi-symbol trade stream to per-(symbol, exchange)
// detectors.
class StreamDetector {
public:
    explicit StreamDetector(DetectorConfig config = {}) : config_(config) {}

    void on_trade(const TradeRecord& t);
    // Flushes all detectors and returns every crash, sorted.
    std::vector<CrashEvent> finish();
    std::size_t active_detectors() const { return detectors_.size(); }

private:
    DetectorConfig config_;
    std::map<std::pair<std::string, ExchangeId>, CrashDetector> detectors_;
    std::vector<CrashEvent> crashes_;
};

// Deterministic report order: symbol, start_ts, exchange, direction, first seq.
void sort_crashes(std::vector<CrashEvent>& crashes);

// Re-checks the type invariants of an emitted crash against a config.
bool crash_invariants_hold(const CrashEvent& c, const DetectorConfig& config = {});

struct CrashStats {
    std::size_t total = 0;
    std::size_t up = 0;
    std::size_t down = 0;
    std::optional<double> avg_pct_change;  // absolute, excludes penny stocks and |change| > 100%
    std::optional<double> avg_duration_ms;
    std::optional<double> avg_volume;
    std::optional<double> avg_trades;
    std::optional<double> iso_trade_pct;   // avg ISO trades as a percentage of avg trades
    std::array<double, kVenueCount> exchange_share_pct{};  // per venue, sums to 100
};

CrashStats crash_stats(std::span<const CrashEvent> crashes);

// "symbol,exchange,direction,start_ts,end_ts,n_trades,tick_count,pct_change,volume,iso_fraction"
inline constexpr std::string_view kCrashHeader =
    "symbol,exchange,direction,start_ts,end_ts,n_trades,tick_count,pct_change,volume,iso_fraction";
std::string format_crash_line(const CrashEvent& c);

}  // namespace flashfx
