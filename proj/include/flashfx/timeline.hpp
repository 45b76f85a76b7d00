#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "flashfx/nbbo.hpp"
#include "flashfx/tape.hpp"

namespace flashfx {

struct VenueTopSnapshot {
    std::int64_t ts = 0;
    std::uint64_t seq = 0;
    ExchangeTop top;
};

// Full quote history of one symbol, indexed for point-in-time lookups both by
// stream position (seq) and by clock time. Built once by replaying a merged
// stream through an NbboBook, then shared read-only by the analysis stages.
class QuoteTimeline {
public:
    QuoteTimeline() = default;
    explicit QuoteTimeline(const EventStream& stream);

    // Appends one quote; quotes must arrive in stream order.
    void add(const QuoteRecord& q);

    std::span<const NbboSnapshot> nbbo_history() const { return nbbo_.view(); }
    std::span<const VenueTopSnapshot> venue_history(ExchangeId e) const {
        return venues_[venue_index(e)];
    }
    bool empty() const { return nbbo_.size() == 0; }
    std::uint64_t stale_quotes() const { return book_.stale_quotes(); }

    // State strictly before stream position seq.
    const NbboSnapshot* nbbo_before_seq(std::uint64_t seq) const;
    std::optional<ExchangeTop> venue_before_seq(ExchangeId e, std::uint64_t seq) const;

    // State after every quote with ts <= t.
    const NbboSnapshot* nbbo_at(std::int64_t t) const;
    std::optional<ExchangeTop> venue_at(ExchangeId e, std::int64_t t) const;

private:
    NbboBook book_;
    NbboHistory nbbo_;
    std::array<std::vector<VenueTopSnapshot>, kVenueCount> venues_;
};

}  // namespace flashfx
