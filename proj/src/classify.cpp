#include "flashfx/classify.hpp"

#include <algorithm>

namespace flashfx {

std::string_view to_string(CrashType t) {
    switch (t) {
        case CrashType::IsoInitiated: return "IsoInitiated";
        case CrashType::AutoRoutingInitiated: return "AutoRoutingInitiated";
        case CrashType::Unclassified: return "Unclassified";
    }
    return "Unclassified";
}

namespace {

bool has_mark(const TradeRecord& t, TradeMark m) { return m == TradeMark::Iso ? t.is_iso : !t.is_iso; }

std::size_t prefix_with(const CrashEvent& c, const std::optional<QuoteBounds>& bounds, TradeMark required) {
    std::size_t k = 0;
    for (std::size_t i = 0; i < c.trades.size(); ++i) {
        if (has_mark(c.trades[i], required)) continue;
        if (!bounds || !bounds->contains(c.trades[i].price)) break;
        k = i + 1;
    }
    return k;
}

std::optional<Price> last_price_before(std::span<const TradeRecord> trades, std::uint64_t seq) {
    auto it = std::lower_bound(trades.begin(), trades.end(), seq,
                               [](const TradeRecord& t, std::uint64_t s) { return t.seq < s; });
    if (it == trades.begin()) return std::nullopt;
    return std::prev(it)->price;
}

}  // namespace

std::size_t exception_prefix(const CrashEvent& c, const QuoteBounds& bounds, TradeMark required) {
    return prefix_with(c, bounds, required);
}

bool suffix_marked(const CrashEvent& c, std::size_t k, TradeMark required) {
    if (k >= c.trades.size()) return false;
    return std::all_of(c.trades.begin() + static_cast<std::ptrdiff_t>(k), c.trades.end(),
                       [required](const TradeRecord& t) { return has_mark(t, required); });
}

bool top_of_book_cleared(const CrashEvent& c, std::size_t run_index, const QuoteTimeline& quotes,
                         std::span<const TradeRecord> symbol_trades, const ClassifyConfig& cfg) {
    const TradeRecord& run = c.trades.at(run_index);
    const bool bid_side = c.direction == CrashDirection::Down;
    const std::int64_t window_start = run.ts - cfg.clearing_lookback_ms;

    auto displayed = [bid_side](const ExchangeTop& top) -> std::optional<std::pair<Price, std::int64_t>> {
        if (bid_side ? !top.has_bid() : !top.has_offer()) return std::nullopt;
        return bid_side ? std::make_pair(top.bid, top.bid_size) : std::make_pair(top.offer, top.offer_size);
    };

    auto first = std::lower_bound(symbol_trades.begin(), symbol_trades.end(), window_start,
                                  [](const TradeRecord& t, std::int64_t ts) { return t.ts < ts; });
    auto last = std::lower_bound(symbol_trades.begin(), symbol_trades.end(), run.seq,
                                 [](const TradeRecord& t, std::uint64_t s) { return t.seq < s; });
    if (last < first) last = first;

    std::uint64_t ref_seq = run.seq;
    for (auto it = first; it < last; ++it) {
        if (it->exchange == c.exchange) continue;
        auto top = quotes.venue_before_seq(it->exchange, it->seq);
        if (!top) continue;
        auto shown = displayed(*top);
        if (shown && shown->first == it->price) {
            ref_seq = it->seq;
            break;
        }
    }

    const NbboSnapshot* ref = quotes.nbbo_before_seq(ref_seq);
    if (ref == nullptr) {
        throw Error(ErrorCode::InsufficientQuoteHistory,
                    "no NBBO before the run at ts " + std::to_string(run.ts));
    }
    const VenueMask venues = bid_side ? ref->nbbo.bid_venues : ref->nbbo.offer_venues;
    for (ExchangeId v : kAllVenues) {
        if (v == c.exchange || (venues & venue_bit(v)) == 0) continue;
        auto top = quotes.venue_before_seq(v, ref_seq);
        auto shown = top ? displayed(*top) : std::nullopt;
        if (!shown) continue;
        std::int64_t matched = 0;
        for (auto it = first; it < last; ++it) {
            if (it->seq < ref_seq || it->exchange != v || it->price != shown->first) continue;
            matched += it->size;
        }
        if (matched < shown->second) return false;
    }
    return true;
}

CrashClassification classify_crash(const CrashEvent& c, const QuoteTimeline& quotes,
                                   std::span<const TradeRecord> symbol_trades,
                                   const ClassifyConfig& cfg) {
    CrashClassification out;
    if (c.trades.empty()) {
        out.notes = "empty crash";
        return out;
    }

    std::optional<QuoteBounds> bounds;
    try {
        StubFilter stub{last_price_before(symbol_trades, c.first_seq()), cfg.stub_threshold};
        bounds = quote_bounds(quotes.nbbo_history(), c.start_ts - 1, cfg.flicker_ms, stub);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::NoHistory) throw;
    }

    const std::size_t k_iso = prefix_with(c, bounds, TradeMark::Iso);
    if (suffix_marked(c, k_iso, TradeMark::Iso)) {
        out.kind = CrashType::IsoInitiated;
        out.prefix_k = k_iso;
        return out;
    }

    const std::size_t k_reg = prefix_with(c, bounds, TradeMark::Regular);
    if (suffix_marked(c, k_reg, TradeMark::Regular)) {
        out.prefix_k = k_reg;
        try {
            out.top_cleared = top_of_book_cleared(c, k_reg, quotes, symbol_trades, cfg);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::InsufficientQuoteHistory) throw;
            out.notes = "InsufficientQuoteHistory: ";
            out.notes += e.what();
            return out;
        }
        if (out.top_cleared) {
            out.kind = CrashType::AutoRoutingInitiated;
        } else {
            out.notes = "regular run without cleared top of book";
        }
        return out;
    }

    out.notes = bounds ? "mixed marks outside the exception prefix"
                       : "InsufficientQuoteHistory: no quote bounds before the crash";
    return out;
}

std::string format_classified_line(const CrashEvent& c, const CrashClassification& k) {
    std::string s = format_crash_line(c);
    s += ',';
    s += std::to_string(static_cast<int>(k.kind));
    s += ',';
    s += std::to_string(k.prefix_k);
    s += ',';
    s += k.top_cleared ? "1" : "0";
    return s;
}

}  // namespace flashfx
