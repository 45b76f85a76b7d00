#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <variant>
#include <vector>

#include "flashfx/error.hpp"
#include "flashfx/exchange.hpp"
#include "flashfx/price.hpp"

namespace flashfx {

inline constexpr std::int64_t kSessionEndMs = 86'400'000;

struct TradeRecord {
    std::int64_t ts = 0;  // ms since midnight
    std::string symbol;
    ExchangeId exchange = ExchangeId::Other;
    Price price;
    std::int64_t size = 0;
    bool is_iso = false;  // sale condition contains "F"
    std::string condition;
    std::uint64_t seq = 0;  // position in the merged stream; not serialized
};

// A side with size 0 is absent; its price is normalized to zero.
struct QuoteRecord {
    std::int64_t ts = 0;
    std::string symbol;
    ExchangeId exchange = ExchangeId::Other;
    Price bid;
    std::int64_t bid_size = 0;
    Price offer;
    std::int64_t offer_size = 0;
    std::uint64_t seq = 0;

    bool has_bid() const { return bid_size > 0; }
    bool has_offer() const { return offer_size > 0; }
};

TradeRecord parse_trade_line(std::string_view line);
QuoteRecord parse_quote_line(std::string_view line);

std::string format_trade_line(const TradeRecord& t);
std::string format_quote_line(const QuoteRecord& q);

inline constexpr std::string_view kTradeHeader = "ts_ms,symbol,exchange,price,size,condition";
inline constexpr std::string_view kQuoteHeader = "ts_ms,symbol,exchange,bid,bid_size,offer,offer_size";

using Event = std::variant<TradeRecord, QuoteRecord>;
using EventStream = std::vector<Event>;

std::int64_t event_ts(const Event& e);
std::uint64_t event_seq(const Event& e);
const std::string& event_symbol(const Event& e);

struct TimeRange {
    std::int64_t from_ms = 0;
    std::int64_t to_ms = kSessionEndMs;
    bool contains(std::int64_t ts) const { return ts >= from_ms && ts <= to_ms; }
};

struct LoadOptions {
    std::unordered_set<std::string> symbols;  // empty keeps every symbol
    TimeRange range;
    double max_reject_rate = 0.01;
};

struct LoadSummary {
    std::uint64_t trades_read = 0;
    std::uint64_t trades_kept = 0;
    std::uint64_t trades_rejected = 0;
    std::uint64_t quotes_read = 0;
    std::uint64_t quotes_kept = 0;
    std::uint64_t quotes_rejected = 0;
    std::uint64_t crossed_quote_warnings = 0;
};

// Reads text lines from a plain or gzip file (".gz").
class LineReader {
public:
    explicit LineReader(const std::string& path);
    ~LineReader();
    LineReader(const LineReader&) = delete;
    LineReader& operator=(const LineReader&) = delete;

    // Returns false at end of file. The view is valid until the next call.
    bool next(std::string_view& line);
    std::uint64_t line_number() const { return line_no_; }
    const std::string& path() const { return path_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::string path_;
    std::uint64_t line_no_ = 0;
};

// Streams the time-ordered merge of a trade file and a quote file. Either
// path may be empty. Memory is bounded by one pending record per file.
class MergedReader {
public:
    MergedReader(const std::string& trades_path, const std::string& quotes_path,
                 LoadOptions options = {});
    ~MergedReader();

    // Yields the next kept event, or nullopt at end. Throws InputError on
    // unsorted input, IO failure, or when the reject rate is exceeded.
    std::optional<Event> next();

    const LoadSummary& summary() const { return summary_; }

private:
    template <class Record>
    struct Source;

    void fill_trade();
    void fill_quote();
    void check_reject_rate() const;

    std::unique_ptr<Source<TradeRecord>> trades_;
    std::unique_ptr<Source<QuoteRecord>> quotes_;
    LoadOptions options_;
    LoadSummary summary_;
    std::uint64_t next_seq_ = 1;
};

EventStream load_merged_stream(const std::string& trades_path, const std::string& quotes_path,
                               const LoadOptions& options = {}, LoadSummary* summary = nullptr);

// In-memory merge of already-sorted record lists, same ordering rules as the
// file reader: by ts, trades before quotes at equal ts, input order otherwise.
EventStream merge_records(std::vector<TradeRecord> trades, std::vector<QuoteRecord> quotes);

// Splits a merged stream into one stream per symbol (sorted by symbol name),
// preserving sequence numbers.
std::vector<std::pair<std::string, EventStream>> split_by_symbol(EventStream stream);

}  // namespace flashfx
