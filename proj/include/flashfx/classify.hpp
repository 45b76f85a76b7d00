#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "flashfx/detect.hpp"
#include "flashfx/nbbo.hpp"
#include "flashfx/timeline.hpp"

namespace flashfx {

// Numeric codes double as the Type regressor of the logit model.
enum class CrashType : std::uint8_t {
    IsoInitiated = 1,
    AutoRoutingInitiated = 2,
    Unclassified = 3,
};

std::string_view to_string(CrashType t);

enum class TradeMark : std::uint8_t { Iso, Regular };

struct CrashClassification {
    CrashType kind = CrashType::Unclassified;
    std::size_t prefix_k = 0;
    bool top_cleared = false;
    std::string notes;
};

struct ClassifyConfig {
    std::int64_t flicker_ms = 1000;            // bounds window before the crash
    std::int64_t clearing_lookback_ms = 1000;  // clearing trades window before the run
    double stub_threshold = 0.5;
};

// Length of the leading segment of the crash that may carry the wrong mark.
// It ends after the last wrongly-marked trade of the longest leading stretch
// in which every wrongly-marked trade prints inside the bounds (inclusive).
// The parent definition holds iff every trade from position k on carries the
// required mark and at least one such trade exists.
std::size_t exception_prefix(const CrashEvent& c, const QuoteBounds& bounds, TradeMark required);

// True iff the crash satisfies the mark condition for the given prefix.
bool suffix_marked(const CrashEvent& c, std::size_t k, TradeMark required);

// Whether every other venue posting the crash-side NBBO had its displayed top
// matched by trades at that venue and price before the regular-marked run.
// run_index is the position of the first regular constituent trade. The
// reference NBBO is the state just before the earliest trade in the lookback
// window that executed against a venue's then-displayed crash-side top, or
// the state just before the run when there is none.
// Throws InsufficientQuoteHistory when no quote precedes the reference point.
bool top_of_book_cleared(const CrashEvent& c, std::size_t run_index, const QuoteTimeline& quotes,
                         std::span<const TradeRecord> symbol_trades, const ClassifyConfig& cfg = {});

// symbol_trades: every trade of the crash's symbol across venues, in stream
// order.
CrashClassification classify_crash(const CrashEvent& c, const QuoteTimeline& quotes,
                                   std::span<const TradeRecord> symbol_trades,
                                   const ClassifyConfig& cfg = {});

// ",type,prefix_k,top_cleared" appended to the crash line.
std::string format_classified_line(const CrashEvent& c, const CrashClassification& k);
inline constexpr std::string_view kClassifiedHeader =
    "symbol,exchange,direction,start_ts,end_ts,n_trades,tick_count,pct_change,volume,iso_fraction,"
    "type,prefix_k,top_cleared";

}  // namespace flashfx
