#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "flashfx/classify.hpp"
#include "flashfx/detect.hpp"
#include "flashfx/nbbo.hpp"
#include "flashfx/tape.hpp"

namespace flashfx {

struct BookLevel {
    Price price;
    std::int64_t size = 0;
};

// One venue's limit order book. Each price level keeps its resting orders in
// arrival order and fills them front first.
class ExchangeBook {
public:
    void add(Side side, Price price, std::int64_t size);
    void clear();

    std::optional<BookLevel> top(Side side) const;
    // Best first.
    std::vector<BookLevel> levels(Side side) const;
    bool empty(Side side) const { return side == Side::Bid ? bids_.empty() : offers_.empty(); }

    // Fills up to qty at the best level of side and returns the filled size.
    std::int64_t take_top(Side side, std::int64_t qty);

    ExchangeTop display() const;
    bool invariants_hold() const;

private:
    using Ladder = std::map<Price, std::deque<std::int64_t>>;
    Ladder bids_;
    Ladder offers_;
};

// A set of venue books with a consolidated feed that lags book changes by a
// fixed dissemination delay.
class Market {
public:
    Market(std::string symbol, std::vector<ExchangeId> venues, std::int64_t sip_latency_ms);

    ExchangeBook& book(ExchangeId v);
    const ExchangeBook& book(ExchangeId v) const;
    const std::vector<ExchangeId>& venues() const { return venues_; }
    const std::string& symbol() const { return symbol_; }
    std::int64_t sip_latency_ms() const { return latency_; }

    // Records one quote per venue whose displayed top changed since the last
    // publication; the record carries ts + latency.
    void publish(std::int64_t ts);
    void print(std::int64_t ts, ExchangeId v, Price price, std::int64_t size, bool iso);

    const std::vector<TradeRecord>& trades() const { return trades_; }
    const std::vector<QuoteRecord>& quotes() const { return quotes_; }

private:
    std::string symbol_;
    std::vector<ExchangeId> venues_;
    std::int64_t latency_;
    std::map<ExchangeId, ExchangeBook> books_;
    std::map<ExchangeId, ExchangeTop> shown_;
    std::vector<TradeRecord> trades_;
    std::vector<QuoteRecord> quotes_;
};

struct CompanionOrder {
    ExchangeId venue = ExchangeId::Other;
    Price price;
    std::int64_t size = 0;
};

// Down sells into bids, Up buys offers.
struct IsoPackage {
    CrashDirection direction = CrashDirection::Down;
    ExchangeId target = ExchangeId::Other;
    Price limit;
    std::int64_t size = 0;
    std::int64_t ts = 0;
    std::int64_t fill_interval_ms = 1;
    std::vector<CompanionOrder> companions;
    bool depth_protection = false;  // walk every venue's book in price order instead
};

// Sizes one companion to each away venue whose protected top is better than
// the limit.
IsoPackage make_iso_package(const Market& m, CrashDirection dir, ExchangeId target, Price limit,
                            std::int64_t size, std::int64_t ts, std::int64_t fill_interval_ms = 1);

// Companions fill at ts; the main order takes one level per fill interval
// from ts + interval on, stopping at the limit, full fill or an empty ladder.
// Throws EmptyBook when the target has nothing on the hit side.
std::vector<TradeRecord> submit_iso_package(Market& m, const IsoPackage& pkg);

struct RoutableOrder {
    CrashDirection direction = CrashDirection::Down;
    ExchangeId venue = ExchangeId::Other;
    std::int64_t size = 0;
    std::int64_t ts = 0;
    std::int64_t fill_interval_ms = 1;
    std::optional<Price> limit;
};

// Slices matching each better-priced away top are routed at ts; the balance
// walks the receiving venue's book from ts + interval on.
std::vector<TradeRecord> submit_routable_order(Market& m, const RoutableOrder& order);

enum class ScenarioKind : std::uint8_t { IsoSweep, AutoRouting, BenignRandomWalk, Mixed };

std::string_view to_string(ScenarioKind k);

struct CrashParams {
    std::optional<ExchangeId> venue;  // defaults to the first venue
    CrashDirection direction = CrashDirection::Down;
    std::int64_t time_ms = 90'000;
    int levels = 12;
    double level_step_pct = 0.1;
    std::int64_t level_size = 500;
    std::int64_t protected_size = 500;
    int deep_levels = 5;
    std::int64_t deep_size = 5000;
    std::int64_t fill_interval_ms = 1;
};

struct ScenarioSpec {
    ScenarioKind kind = ScenarioKind::IsoSweep;
    std::uint64_t seed = 1;
    std::string symbol = "SIM";
    std::vector<ExchangeId> venues{ExchangeId::NYSE, ExchangeId::NASDAQ, ExchangeId::ARCA};
    double start_price = 100.0;
    double spread_pct = 0.05;
    double post_spread_widening_pct = 0.0;
    std::int64_t duration_ms = 180'000;
    std::int64_t quote_interval_ms = 100;
    double trade_probability = 0.3;  // per venue per quote interval
    int run_cap = 5;
    std::int64_t sip_latency_ms = 10;
    bool depth_protection = false;
    int mixed_crashes = 4;
    CrashParams crash;
};

// Throws InvalidSpec, with the byte offset for malformed JSON.
ScenarioSpec parse_scenario_spec(std::string_view json_text);
ScenarioSpec load_scenario_spec(const std::filesystem::path& path);

struct CrashLabel {
    ScenarioKind kind = ScenarioKind::IsoSweep;
    std::string symbol;
    ExchangeId venue = ExchangeId::Other;
    CrashDirection direction = CrashDirection::Down;
    std::int64_t start_ts = 0;
    std::int64_t end_ts = 0;
    int n_trades = 0;
    std::optional<CrashType> expected_type;  // nullopt: no crash should be detected
    bool fleeting = false;
};

struct ScenarioOutput {
    ScenarioSpec spec;
    std::vector<TradeRecord> trades;  // ts order
    std::vector<QuoteRecord> quotes;  // ts order
    std::vector<CrashLabel> labels;

    std::string trades_csv() const;
    std::string quotes_csv() const;
    std::string label_json() const;
};

ScenarioOutput generate_scenario(const ScenarioSpec& spec);

// Writes trades.csv, quotes.csv and label.json; returns their paths.
std::vector<std::filesystem::path> write_scenario(const ScenarioOutput& out, const std::filesystem::path& dir);

}  // namespace flashfx
