#include "flashfx/timeline.hpp"

#include <algorithm>

namespace flashfx {

QuoteTimeline::QuoteTimeline(const EventStream& stream) {
    for (const Event& e : stream) {
        if (const auto* q = std::get_if<QuoteRecord>(&e)) add(*q);
    }
}

void QuoteTimeline::add(const QuoteRecord& q) {
    const std::uint64_t stale_before = book_.stale_quotes();
    auto change = book_.apply_quote(q);
    if (book_.stale_quotes() != stale_before) return;
    venues_[venue_index(q.exchange)].push_back({q.ts, q.seq, book_.top(q.exchange)});
    if (change) nbbo_.push({q.ts, q.seq, *change});
}

namespace {

template <class Snap>
const Snap* last_before_seq(std::span<const Snap> hist, std::uint64_t seq) {
    auto it = std::lower_bound(hist.begin(), hist.end(), seq,
                               [](const Snap& s, std::uint64_t x) { return s.seq < x; });
    if (it == hist.begin()) return nullptr;
    return &*std::prev(it);
}

template <class Snap>
const Snap* last_at(std::span<const Snap> hist, std::int64_t t) {
    auto it = std::upper_bound(hist.begin(), hist.end(), t,
                               [](std::int64_t x, const Snap& s) { return x < s.ts; });
    if (it == hist.begin()) return nullptr;
    return &*std::prev(it);
}

}  // namespace

const NbboSnapshot* QuoteTimeline::nbbo_before_seq(std::uint64_t seq) const {
    return last_before_seq(nbbo_history(), seq);
}

std::optional<ExchangeTop> QuoteTimeline::venue_before_seq(ExchangeId e, std::uint64_t seq) const {
    const auto* s = last_before_seq(venue_history(e), seq);
    if (!s) return std::nullopt;
    return s->top;
}

const NbboSnapshot* QuoteTimeline::nbbo_at(std::int64_t t) const {
    return last_at(nbbo_history(), t);
}

std::optional<ExchangeTop> QuoteTimeline::venue_at(ExchangeId e, std::int64_t t) const {
    const auto* s = last_at(venue_history(e), t);
    if (!s) return std::nullopt;
    return s->top;
}

}  // namespace flashfx
