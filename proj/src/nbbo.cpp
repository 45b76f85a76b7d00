#include "flashfx/nbbo.hpp"

#include <algorithm>
#include <cmath>

namespace flashfx {

std::string_view to_string(NbboStatus s) {
    switch (s) {
        case NbboStatus::Empty: return "Empty";
        case NbboStatus::OneSided: return "OneSided";
        case NbboStatus::Normal: return "Normal";
        case NbboStatus::Locked: return "Locked";
        case NbboStatus::Crossed: return "Crossed";
    }
    return "Empty";
}

NbboStatus nbbo_status(bool has_bid, Price bid, bool has_offer, Price offer) {
    if (!has_bid && !has_offer) return NbboStatus::Empty;
    if (!has_bid || !has_offer) return NbboStatus::OneSided;
    if (bid > offer) return NbboStatus::Crossed;
    if (bid == offer) return NbboStatus::Locked;
    return NbboStatus::Normal;
}

Nbbo consolidate(const std::array<ExchangeTop, kVenueCount>& tops) {
    Nbbo n;
    for (std::size_t v = 0; v < kVenueCount; ++v) {
        const ExchangeTop& t = tops[v];
        auto bit = static_cast<VenueMask>(1u << v);
        if (t.has_bid()) {
            if (!n.has_bid() || t.bid > n.best_bid) {
                n.best_bid = t.bid;
                n.best_bid_size = t.bid_size;
                n.bid_venues = bit;
            } else if (t.bid == n.best_bid) {
                n.best_bid_size += t.bid_size;
                n.bid_venues |= bit;
            }
        }
        if (t.has_offer()) {
            if (!n.has_offer() || t.offer < n.best_offer) {
                n.best_offer = t.offer;
                n.best_offer_size = t.offer_size;
                n.offer_venues = bit;
            } else if (t.offer == n.best_offer) {
                n.best_offer_size += t.offer_size;
                n.offer_venues |= bit;
            }
        }
    }
    n.status = nbbo_status(n);
    return n;
}

bool is_stub_quote(Price price, Price reference, double threshold) {
    if (price.units() <= 100) return true;  // one cent or less
    double ref = static_cast<double>(reference.units());
    double dev = std::abs(static_cast<double>(price.units()) - ref);
    return dev > threshold * ref;
}

QuoteBounds quote_bounds(std::span<const NbboSnapshot> history, std::int64_t t,
                         std::int64_t window_ms, const StubFilter& stub) {
    QuoteBounds b;
    const std::int64_t lo = t - window_ms;
    // First snapshot with ts > lo; the one before it (if any) straddles lo.
    auto first_in = std::upper_bound(history.begin(), history.end(), lo,
                                     [](std::int64_t x, const NbboSnapshot& s) { return x < s.ts; });
    auto begin = first_in == history.begin() ? first_in : std::prev(first_in);
    auto end = std::upper_bound(history.begin(), history.end(), t,
                                [](std::int64_t x, const NbboSnapshot& s) { return x < s.ts; });
    auto usable = [&stub](Price p) {
        if (p.units() <= 100) return false;
        return !stub.reference || !is_stub_quote(p, *stub.reference, stub.threshold);
    };
    for (auto it = begin; it < end; ++it) {
        const Nbbo& n = it->nbbo;
        if (n.has_bid() && usable(n.best_bid)) {
            if (!b.least_aggressive_bid || n.best_bid < *b.least_aggressive_bid) {
                b.least_aggressive_bid = n.best_bid;
            }
        }
        if (n.has_offer() && usable(n.best_offer)) {
            if (!b.least_aggressive_offer || n.best_offer > *b.least_aggressive_offer) {
                b.least_aggressive_offer = n.best_offer;
            }
        }
    }
    if (!b.least_aggressive_bid && !b.least_aggressive_offer) {
        throw Error(ErrorCode::NoHistory, "no NBBO snapshot in the bounds window ending at " +
                                              std::to_string(t));
    }
    return b;
}

std::vector<ProtectedQuote> protected_quotes(const std::array<ExchangeTop, kVenueCount>& tops,
                                             const Nbbo& nbbo) {
    std::vector<ProtectedQuote> out;
    for (std::size_t v = 0; v < kVenueCount; ++v) {
        if (nbbo.bid_venues & (1u << v)) {
            out.push_back({static_cast<ExchangeId>(v), Side::Bid, tops[v].bid, tops[v].bid_size});
        }
    }
    for (std::size_t v = 0; v < kVenueCount; ++v) {
        if (nbbo.offer_venues & (1u << v)) {
            out.push_back({static_cast<ExchangeId>(v), Side::Offer, tops[v].offer, tops[v].offer_size});
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

void NbboHistory::push(const NbboSnapshot& s) {
    data_.push_back(s);
    if (retention_ms_ > 0) prune(s.ts);
}

void NbboHistory::prune(std::int64_t now) {
    const std::int64_t horizon = now - retention_ms_;
    // Keep the last snapshot at or before the horizon.
    while (data_.size() - dead_ >= 2 && data_[dead_ + 1].ts <= horizon) ++dead_;
    if (dead_ > 1024 && dead_ * 2 > data_.size()) {
        data_.erase(data_.begin(), data_.begin() + static_cast<std::ptrdiff_t>(dead_));
        dead_ = 0;
    }
}

NbboBook::NbboBook(std::string symbol, std::int64_t history_retention_ms)
    : symbol_(std::move(symbol)), history_(history_retention_ms) {}

void NbboBook::rescan_bid() {
    nbbo_.best_bid = Price();
    nbbo_.best_bid_size = 0;
    nbbo_.bid_venues = 0;
    for (std::size_t v = 0; v < kVenueCount; ++v) {
        const ExchangeTop& t = tops_[v];
        if (!t.has_bid()) continue;
        auto bit = static_cast<VenueMask>(1u << v);
        if (!nbbo_.has_bid() || t.bid > nbbo_.best_bid) {
            nbbo_.best_bid = t.bid;
            nbbo_.best_bid_size = t.bid_size;
            nbbo_.bid_venues = bit;
        } else if (t.bid == nbbo_.best_bid) {
            nbbo_.best_bid_size += t.bid_size;
            nbbo_.bid_venues |= bit;
        }
    }
}

void NbboBook::rescan_offer() {
    nbbo_.best_offer = Price();
    nbbo_.best_offer_size = 0;
    nbbo_.offer_venues = 0;
    for (std::size_t v = 0; v < kVenueCount; ++v) {
        const ExchangeTop& t = tops_[v];
        if (!t.has_offer()) continue;
        auto bit = static_cast<VenueMask>(1u << v);
        if (!nbbo_.has_offer() || t.offer < nbbo_.best_offer) {
            nbbo_.best_offer = t.offer;
            nbbo_.best_offer_size = t.offer_size;
            nbbo_.offer_venues = bit;
        } else if (t.offer == nbbo_.best_offer) {
            nbbo_.best_offer_size += t.offer_size;
            nbbo_.offer_venues |= bit;
        }
    }
}

void NbboBook::update_bid_side(std::size_t v, const ExchangeTop& old_top) {
    const ExchangeTop& now = tops_[v];
    auto bit = static_cast<VenueMask>(1u << v);
    const bool was_at_best = (nbbo_.bid_venues & bit) != 0;
    if (now.has_bid() && (!nbbo_.has_bid() || now.bid > nbbo_.best_bid)) {
        nbbo_.best_bid = now.bid;
        nbbo_.best_bid_size = now.bid_size;
        nbbo_.bid_venues = bit;
    } else if (now.has_bid() && now.bid == nbbo_.best_bid) {
        nbbo_.best_bid_size += now.bid_size - (was_at_best ? old_top.bid_size : 0);
        nbbo_.bid_venues |= bit;
    } else if (was_at_best) {
        rescan_bid();
    }
}

void NbboBook::update_offer_side(std::size_t v, const ExchangeTop& old_top) {
    const ExchangeTop& now = tops_[v];
    auto bit = static_cast<VenueMask>(1u << v);
    const bool was_at_best = (nbbo_.offer_venues & bit) != 0;
    if (now.has_offer() && (!nbbo_.has_offer() || now.offer < nbbo_.best_offer)) {
        nbbo_.best_offer = now.offer;
        nbbo_.best_offer_size = now.offer_size;
        nbbo_.offer_venues = bit;
    } else if (now.has_offer() && now.offer == nbbo_.best_offer) {
        nbbo_.best_offer_size += now.offer_size - (was_at_best ? old_top.offer_size : 0);
        nbbo_.offer_venues |= bit;
    } else if (was_at_best) {
        rescan_offer();
    }
}

std::optional<Nbbo> NbboBook::apply_quote(const QuoteRecord& q) {
    if (q.ts < clock_) {
        ++stale_;
        return std::nullopt;
    }
    clock_ = q.ts;
    const std::size_t v = venue_index(q.exchange);
    const ExchangeTop old_top = tops_[v];
    ExchangeTop& t = tops_[v];
    t.bid = q.has_bid() ? q.bid : Price();
    t.bid_size = q.has_bid() ? q.bid_size : 0;
    t.offer = q.has_offer() ? q.offer : Price();
    t.offer_size = q.has_offer() ? q.offer_size : 0;
    t.ts = q.ts;

    const Nbbo before = nbbo_;
    update_bid_side(v, old_top);
    update_offer_side(v, old_top);
    nbbo_.status = nbbo_status(nbbo_);
    if (nbbo_.same_observable(before)) return std::nullopt;
    history_.push({q.ts, q.seq, nbbo_});
    return nbbo_;
}

std::vector<ProtectedQuote> NbboBook::protected_quotes() const {
    return flashfx::protected_quotes(tops_, nbbo_);
}

QuoteBounds NbboBook::quote_bounds(std::int64_t t, std::int64_t window_ms,
                                   const StubFilter& stub) const {
    return flashfx::quote_bounds(history_.view(), t, window_ms, stub);
}

std::string format_nbbo_line(std::int64_t ts, const Nbbo& n) {
    std::string s = std::to_string(ts);
    s += ',';
    append_price(s, n.best_bid);
    s += ',';
    s += std::to_string(n.best_bid_size);
    s += ',';
    append_price(s, n.best_offer);
    s += ',';
    s += std::to_string(n.best_offer_size);
    s += ',';
    s += to_string(n.status);
    return s;
}

}  // namespace flashfx
