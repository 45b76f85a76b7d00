#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flashfx/exchange.hpp"
#include "flashfx/price.hpp"
#include "flashfx/tape.hpp"

namespace flashfx {

enum class Side : std::uint8_t { Bid, Offer };

enum class NbboStatus : std::uint8_t { Empty, OneSided, Normal, Locked, Crossed };

std::string_view to_string(NbboStatus s);

// Displayed top of book of one venue. A side with size 0 is absent.
struct ExchangeTop {
    Price bid;
    std::int64_t bid_size = 0;
    Price offer;
    std::int64_t offer_size = 0;
    std::int64_t ts = -1;  // last update, -1 if never quoted

    bool has_bid() const { return bid_size > 0; }
    bool has_offer() const { return offer_size > 0; }
    bool operator==(const ExchangeTop&) const = default;
};

using VenueMask = std::uint8_t;

constexpr VenueMask venue_bit(ExchangeId e) { return static_cast<VenueMask>(1u << venue_index(e)); }

struct Nbbo {
    Price best_bid;
    std::int64_t best_bid_size = 0;  // aggregate over venues at the best bid
    Price best_offer;
    std::int64_t best_offer_size = 0;
    VenueMask bid_venues = 0;
    VenueMask offer_venues = 0;
    NbboStatus status = NbboStatus::Empty;

    bool has_bid() const { return best_bid_size > 0; }
    bool has_offer() const { return best_offer_size > 0; }
    bool two_sided() const { return has_bid() && has_offer(); }

    // Equality on what downstream consumers observe: prices, sizes and status.
    bool same_observable(const Nbbo& o) const {
        return best_bid == o.best_bid && best_bid_size == o.best_bid_size &&
               best_offer == o.best_offer && best_offer_size == o.best_offer_size &&
               status == o.status;
    }
};

// Status is a pure function of the two best prices and which sides exist.
NbboStatus nbbo_status(bool has_bid, Price bid, bool has_offer, Price offer);
inline NbboStatus nbbo_status(const Nbbo& n) {
    return nbbo_status(n.has_bid(), n.best_bid, n.has_offer(), n.best_offer);
}

// From-scratch consolidation over a full set of venue tops.
Nbbo consolidate(const std::array<ExchangeTop, kVenueCount>& tops);

struct NbboSnapshot {
    std::int64_t ts = 0;
    std::uint64_t seq = 0;
    Nbbo nbbo;
};

struct QuoteBounds {
    std::optional<Price> least_aggressive_bid;    // min best bid over the window
    std::optional<Price> least_aggressive_offer;  // max best offer over the window

    // Inclusive; a missing side does not bound.
    bool contains(Price p) const {
        if (least_aggressive_bid && p < *least_aggressive_bid) return false;
        if (least_aggressive_offer && p > *least_aggressive_offer) return false;
        return true;
    }
};

struct StubFilter {
    std::optional<Price> reference;  // last trade or midprice
    double threshold = 0.5;          // fraction of the reference price
};

// True iff the price is at or below one cent, or deviates from the
// reference by more than the threshold fraction.
bool is_stub_quote(Price price, Price reference, double threshold = 0.5);

// Least aggressive best quotes over NBBO snapshots in (t - window, t], plus
// the snapshot in effect at t - window. Throws NoHistory when no snapshot
// contributes a non-stub side.
QuoteBounds quote_bounds(std::span<const NbboSnapshot> history, std::int64_t t,
                         std::int64_t window_ms = 1000, const StubFilter& stub = {});

struct ProtectedQuote {
    ExchangeId exchange;
    Side side;
    Price price;
    std::int64_t size;
    bool operator==(const ProtectedQuote&) const = default;
};

// Change points of the NBBO with a retention horizon. Snapshots older than
// the horizon are pruned except the one straddling its start.
class NbboHistory {
public:
    explicit NbboHistory(std::int64_t retention_ms = 0) : retention_ms_(retention_ms) {}

    void push(const NbboSnapshot& s);
    std::span<const NbboSnapshot> view() const {
        return {data_.data() + dead_, data_.size() - dead_};
    }
    std::size_t size() const { return data_.size() - dead_; }

private:
    void prune(std::int64_t now);

    std::int64_t retention_ms_;  // 0 keeps everything
    std::vector<NbboSnapshot> data_;
    std::size_t dead_ = 0;  // pruned prefix awaiting compaction
};

// Per-symbol consolidated top-of-book state.
class NbboBook {
public:
    explicit NbboBook(std::string symbol = {}, std::int64_t history_retention_ms = 0);

    // Replaces the venue's top and recomputes the NBBO. Returns the new NBBO
    // when prices, sizes or status changed. Quotes older than the book clock
    // are rejected and counted.
    std::optional<Nbbo> apply_quote(const QuoteRecord& q);

    const Nbbo& nbbo() const { return nbbo_; }
    const ExchangeTop& top(ExchangeId e) const { return tops_[venue_index(e)]; }
    const std::array<ExchangeTop, kVenueCount>& tops() const { return tops_; }
    const std::string& symbol() const { return symbol_; }
    std::int64_t clock() const { return clock_; }
    std::uint64_t stale_quotes() const { return stale_; }
    const NbboHistory& history() const { return history_; }

    std::vector<ProtectedQuote> protected_quotes() const;
    QuoteBounds quote_bounds(std::int64_t t, std::int64_t window_ms = 1000,
                             const StubFilter& stub = {}) const;

private:
    void update_bid_side(std::size_t v, const ExchangeTop& old_top);
    void update_offer_side(std::size_t v, const ExchangeTop& old_top);
    void rescan_bid();
    void rescan_offer();

    std::string symbol_;
    std::array<ExchangeTop, kVenueCount> tops_{};
    Nbbo nbbo_;
    std::int64_t clock_ = -1;
    std::uint64_t stale_ = 0;
    NbboHistory history_;
};

std::vector<ProtectedQuote> protected_quotes(const std::array<ExchangeTop, kVenueCount>& tops,
                                             const Nbbo& nbbo);

// "ts,best_bid,bid_size,best_offer,offer_size,status"
std::string format_nbbo_line(std::int64_t ts, const Nbbo& n);
inline constexpr std::string_view kNbboHeader = "ts,best_bid,bid_size,best_offer,offer_size,status";

}  // namespace flashfx
