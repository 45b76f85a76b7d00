#include "flashfx/liquidity.hpp"

#include <algorithm>
#include <cstdio>

#include <nlohmann/json.hpp>

namespace flashfx {

double midprice(Price bid, Price offer) {
    if (!bid.positive() || !offer.positive()) {
        throw Error(ErrorCode::MissingSide, "midprice needs both sides");
    }
    return (offer.dollars() + bid.dollars()) / 2.0;
}

double relative_spread(Price bid, Price offer) {
    if (!bid.positive() || !offer.positive()) {
        throw Error(ErrorCode::MissingSide, "spread needs both sides");
    }
    // Ratio of integers keeps the result exactly scale invariant.
    const double diff = static_cast<double>(offer.units() - bid.units());
    const double sum = static_cast<double>(offer.units() + bid.units());
    return diff / sum * 200.0;
}

std::optional<double> nbbo_relative_spread(const Nbbo& n) {
    switch (n.status) {
        case NbboStatus::Locked:
        case NbboStatus::Crossed: return 0.0;
        case NbboStatus::Normal: return relative_spread(n.best_bid, n.best_offer);
        default: return std::nullopt;
    }
}

std::string_view metric_name(Metric m) {
    switch (m) {
        case Metric::NbboSpread: return "nbbo_spread";
        case Metric::ExchangeSpread: return "exchange_spread";
        case Metric::NbboBidVolume: return "nbbo_bid_volume";
        case Metric::NbboOfferVolume: return "nbbo_offer_volume";
        case Metric::VenueBidVolume: return "venue_bid_volume";
        case Metric::VenueOfferVolume: return "venue_offer_volume";
        case Metric::LockedCrossed: return "locked_crossed";
    }
    return "unknown";
}

std::optional<int> bucket_offset(std::int64_t ts, std::int64_t start_ts, const StudyConfig& cfg) {
    const std::int64_t rel = ts - start_ts;
    if (rel < -cfg.window_ms || rel >= cfg.window_ms) return std::nullopt;
    // Floor division for negative offsets.
    std::int64_t b = rel / cfg.bucket_ms;
    if (rel % cfg.bucket_ms != 0 && rel < 0) --b;
    return static_cast<int>(b);
}

namespace {

std::optional<double> sample_nbbo(const NbboSnapshot* s, Metric m) {
    if (s == nullptr) return std::nullopt;
    const Nbbo& n = s->nbbo;
    switch (m) {
        case Metric::NbboSpread: return nbbo_relative_spread(n);
        case Metric::NbboBidVolume:
            return n.has_bid() ? std::optional<double>(static_cast<double>(n.best_bid_size)) : std::nullopt;
        case Metric::NbboOfferVolume:
            return n.has_offer() ? std::optional<double>(static_cast<double>(n.best_offer_size)) : std::nullopt;
        default: return std::nullopt;
    }
}

std::optional<double> sample_venue(const std::optional<ExchangeTop>& t, Metric m) {
    if (!t) return std::nullopt;
    switch (m) {
        case Metric::ExchangeSpread:
            if (!t->has_bid() || !t->has_offer()) return std::nullopt;
            return relative_spread(t->bid, t->offer);
        case Metric::VenueBidVolume:
            return t->has_bid() ? std::optional<double>(static_cast<double>(t->bid_size)) : std::nullopt;
        case Metric::VenueOfferVolume:
            return t->has_offer() ? std::optional<double>(static_cast<double>(t->offer_size)) : std::nullopt;
        default: return std::nullopt;
    }
}

std::optional<double> bucket_locked_crossed(std::span<const NbboSnapshot> h, std::int64_t lo,
                                            std::int64_t hi) {
    auto cmp = [](const NbboSnapshot& s, std::int64_t t) { return s.ts < t; };
    auto first = std::lower_bound(h.begin(), h.end(), lo, cmp);
    auto last = std::lower_bound(first, h.end(), hi, cmp);
    std::size_t two_sided = 0, lc = 0;
    for (auto it = first; it < last; ++it) {
        if (!it->nbbo.two_sided()) continue;
        ++two_sided;
        if (it->nbbo.status == NbboStatus::Locked || it->nbbo.status == NbboStatus::Crossed) ++lc;
    }
    if (two_sided == 0) return std::nullopt;
    return 100.0 * static_cast<double>(lc) / static_cast<double>(two_sided);
}

}  // namespace

EventWindowSeries event_window_series(std::int64_t start_ts, const QuoteTimeline& quotes, Metric metric,
                                      ExchangeId venue, const StudyConfig& cfg) {
    EventWindowSeries s;
    s.metric = metric;
    s.bucket_ms = cfg.bucket_ms;
    const int n = cfg.buckets_per_side();
    s.first_offset = -n;
    s.values.reserve(static_cast<std::size_t>(2 * n));
    for (int b = -n; b < n; ++b) {
        const std::int64_t lo = start_ts + b * cfg.bucket_ms;
        const std::int64_t hi = lo + cfg.bucket_ms;
        switch (metric) {
            case Metric::NbboSpread:
            case Metric::NbboBidVolume:
            case Metric::NbboOfferVolume:
                s.values.push_back(sample_nbbo(quotes.nbbo_at(hi - 1), metric));
                break;
            case Metric::ExchangeSpread:
            case Metric::VenueBidVolume:
            case Metric::VenueOfferVolume:
                s.values.push_back(sample_venue(quotes.venue_at(venue, hi - 1), metric));
                break;
            case Metric::LockedCrossed:
                s.values.push_back(bucket_locked_crossed(quotes.nbbo_history(), lo, hi));
                break;
        }
    }
    return s;
}

EventWindowSeries quoted_volume_series(std::int64_t start_ts, const QuoteTimeline& quotes, Side side,
                                       VolumeScope scope, ExchangeId venue, const StudyConfig& cfg) {
    Metric m;
    if (scope == VolumeScope::Nbbo) {
        m = side == Side::Bid ? Metric::NbboBidVolume : Metric::NbboOfferVolume;
    } else {
        m = side == Side::Bid ? Metric::VenueBidVolume : Metric::VenueOfferVolume;
    }
    return event_window_series(start_ts, quotes, m, venue, cfg);
}

double locked_crossed_fraction(std::span<const NbboSnapshot> history, std::int64_t from_ms,
                               std::int64_t to_ms) {
    auto v = bucket_locked_crossed(history, from_ms, to_ms);
    if (!v) {
        throw Error(ErrorCode::EmptyWindow, "no two-sided NBBO update in [" + std::to_string(from_ms) +
                                                ", " + std::to_string(to_ms) + ")");
    }
    return *v;
}

std::optional<double> AggregateSeries::pct_change() const {
    if (!pre_mean || !post_mean || *pre_mean == 0.0) return std::nullopt;
    return (*post_mean - *pre_mean) / *pre_mean * 100.0;
}

void EventStudyAccumulator::add(const EventWindowSeries& s) {
    if (!shaped_) {
        shaped_ = true;
        metric_ = s.metric;
        bucket_ms_ = s.bucket_ms;
        first_offset_ = s.first_offset;
        sum_.assign(s.values.size(), 0.0);
        count_.assign(s.values.size(), 0);
    } else if (s.values.size() != sum_.size() || s.first_offset != first_offset_ || s.metric != metric_) {
        throw Error(ErrorCode::InvalidConfig, "event windows of different shapes");
    }
    for (std::size_t i = 0; i < sum_.size(); ++i) {
        if (s.values[i]) {
            sum_[i] += *s.values[i];
            ++count_[i];
        }
    }
    ++events_;
}

void EventStudyAccumulator::merge(const EventStudyAccumulator& o) {
    if (!o.shaped_) return;
    if (!shaped_) {
        *this = o;
        return;
    }
    if (o.sum_.size() != sum_.size() || o.first_offset_ != first_offset_ || o.metric_ != metric_) {
        throw Error(ErrorCode::InvalidConfig, "event windows of different shapes");
    }
    for (std::size_t i = 0; i < sum_.size(); ++i) {
        sum_[i] += o.sum_[i];
        count_[i] += o.count_[i];
    }
    events_ += o.events_;
}

AggregateSeries EventStudyAccumulator::result() const {
    AggregateSeries a;
    a.metric = metric_;
    a.bucket_ms = bucket_ms_;
    a.first_offset = first_offset_;
    a.count = count_;
    a.mean.resize(sum_.size());
    double pre = 0.0, post = 0.0;
    std::size_t pre_n = 0, post_n = 0;
    for (std::size_t i = 0; i < sum_.size(); ++i) {
        if (count_[i] == 0) continue;
        const double m = sum_[i] / static_cast<double>(count_[i]);
        a.mean[i] = m;
        if (first_offset_ + static_cast<int>(i) < 0) {
            pre += m;
            ++pre_n;
        } else {
            post += m;
            ++post_n;
        }
    }
    if (pre_n > 0) a.pre_mean = pre / static_cast<double>(pre_n);
    if (post_n > 0) a.post_mean = post / static_cast<double>(post_n);
    return a;
}

AggregateSeries aggregate_event_study(std::span<const EventWindowSeries> series) {
    EventStudyAccumulator acc;
    for (const auto& s : series) acc.add(s);
    return acc.result();
}

std::string format_aggregate_csv(const AggregateSeries& a) {
    std::string out = "offset_ms,mean,count\n";
    char buf[96];
    for (std::size_t i = 0; i < a.mean.size(); ++i) {
        const long long offset = static_cast<long long>(a.first_offset + static_cast<int>(i)) * a.bucket_ms;
        if (a.mean[i]) {
            std::snprintf(buf, sizeof buf, "%lld,%.6f,%zu\n", offset, *a.mean[i], a.count[i]);
        } else {
            std::snprintf(buf, sizeof buf, "%lld,,0\n", offset);
        }
        out += buf;
    }
    return out;
}

std::string format_aggregate_summary_json(const AggregateSeries& a) {
    nlohmann::ordered_json j;
    auto opt = [](const std::optional<double>& v) -> nlohmann::ordered_json {
        return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
    };
    j["metric"] = std::string(metric_name(a.metric));
    j["pre_mean"] = opt(a.pre_mean);
    j["post_mean"] = opt(a.post_mean);
    j["pct_change"] = opt(a.pct_change());
    return j.dump(2) + "\n";
}

}  // namespace flashfx
